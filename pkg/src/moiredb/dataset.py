"""On-disk formats: mixing-set directories with manifests, CIFAR binary
ingestion, and augmented dataset output.

Every format round-trips bit-exactly. A mixing set is reproducible from its
manifest alone: each image is a pure function of (master_seed, index) plus
the recorded parameter ranges, and the manifest stores a content hash of the
raw pixels so corruption is always detectable.
"""

from __future__ import annotations

import json
import multiprocessing
from dataclasses import dataclass
from functools import partial
from pathlib import Path

import numpy as np
from PIL import Image

from .mixing import (
    MixConfig,
    pixmix_augment,
    resize_nearest,
    unit_from_bytes,
    unit_to_bytes,
)
from .moire import (
    ConcentricPatternSpec,
    GrayImage,
    MoireImageSpec,
    ParamRanges,
    generate_moire,
    sample_spec,
)
from .rng import MASK64, Xoshiro256pp, derive_seed

# Fixed so a given Pillow/zlib produces byte-stable files; hashes cover raw
# pixels, so verification never depends on the container.
PNG_COMPRESS_LEVEL = 1

MANIFEST_NAME = "manifest.json"
HEADER_NAME = "header.json"
LABELS_NAME = "labels.txt"

CIFAR10_RECORD_BYTES = 3073  # 1 label byte + 3*1024 channel-planar pixels
CIFAR100_RECORD_BYTES = 3074  # coarse byte (ignored) + fine byte + pixels

FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3


class DatasetError(Exception):
    """A dataset on disk is missing, malformed, or fails verification."""


# ---------------------------------------------------------------------------
# Pixel containers


@dataclass(frozen=True, eq=False)
class RgbImage:
    """Dense 8-bit RGB buffer; pixels has shape (height, width, 3)."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.pixels.dtype != np.uint8:
            raise ValueError(f"pixels must be uint8, got {self.pixels.dtype}")
        if self.pixels.shape != (self.height, self.width, 3):
            raise ValueError(
                f"pixels shape {self.pixels.shape} does not match "
                f"{self.height}x{self.width}x3"
            )
        self.pixels.setflags(write=False)

    def __eq__(self, other):
        if not isinstance(other, RgbImage):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.pixels, other.pixels)
        )


@dataclass(frozen=True, eq=False)
class LabeledImage:
    """One training record: an RGB image and its integer class id."""

    image: RgbImage
    label: int

    def __eq__(self, other):
        if not isinstance(other, LabeledImage):
            return NotImplemented
        return self.label == other.label and self.image == other.image


# ---------------------------------------------------------------------------
# Content hashing (64-bit FNV-1a; cheap and portable, not cryptographic)


def _fnv1a64_py(data: bytes) -> int:
    h = FNV64_OFFSET
    for b in data:
        h = ((h ^ b) * FNV64_PRIME) & MASK64
    return h


try:  # optional fast path; the pure-Python fallback is always available
    import numba as _numba

    # image buffers are flagged immutable, so accept read-only arrays
    _fnv_sig = _numba.uint64(_numba.types.Array(_numba.uint8, 1, "C", readonly=True))

    @_numba.njit(_fnv_sig, cache=True)
    def _fnv1a64_jit(data):  # pragma: no cover - exercised via fnv1a64
        h = _numba.uint64(FNV64_OFFSET)
        p = _numba.uint64(FNV64_PRIME)
        for i in range(data.size):
            h = (h ^ _numba.uint64(data[i])) * p
        return h

except ImportError:  # pragma: no cover
    _fnv1a64_jit = None


def fnv1a64(data) -> int:
    """64-bit FNV-1a over bytes or a uint8 array."""
    if isinstance(data, np.ndarray):
        arr = np.ascontiguousarray(data, dtype=np.uint8).reshape(-1)
    else:
        arr = np.frombuffer(bytes(data), dtype=np.uint8)
    if _fnv1a64_jit is not None:
        view = arr.view()
        view.setflags(write=False)  # the jitted kernel is compiled read-only
        return int(_fnv1a64_jit(view))
    return _fnv1a64_py(arr.tobytes())


def content_hash(img: GrayImage) -> int:
    """Hash of an image's raw row-major pixel bytes."""
    return fnv1a64(img.pixels)


def dataset_hash(manifest: "DatasetManifest") -> int:
    """Hash of the whole set: FNV-1a over each entry's content hash packed
    as 8 big-endian bytes, in index order."""
    blob = b"".join(e.content_hash.to_bytes(8, "big") for e in manifest.entries)
    return fnv1a64(blob)


# ---------------------------------------------------------------------------
# PNG I/O


def save_gray_png(img: GrayImage, path) -> None:
    try:
        Image.fromarray(img.pixels, mode="L").save(
            str(path), format="PNG", compress_level=PNG_COMPRESS_LEVEL
        )
    except OSError as e:
        raise OSError(f"failed writing {path}: {e}") from e


def load_gray_png(path) -> GrayImage:
    try:
        with Image.open(str(path)) as im:
            if im.mode != "L":
                raise DatasetError(f"{path}: expected 8-bit grayscale, got mode {im.mode}")
            arr = np.asarray(im, dtype=np.uint8)
    except FileNotFoundError:
        raise
    except OSError as e:
        raise DatasetError(f"failed reading {path}: {e}") from e
    return GrayImage(arr.shape[1], arr.shape[0], arr)


def save_rgb_png(img: RgbImage, path) -> None:
    try:
        Image.fromarray(img.pixels, mode="RGB").save(
            str(path), format="PNG", compress_level=PNG_COMPRESS_LEVEL
        )
    except OSError as e:
        raise OSError(f"failed writing {path}: {e}") from e


def load_rgb_png(path) -> RgbImage:
    try:
        with Image.open(str(path)) as im:
            if im.mode != "RGB":
                raise DatasetError(f"{path}: expected RGB, got mode {im.mode}")
            arr = np.asarray(im, dtype=np.uint8)
    except FileNotFoundError:
        raise
    except OSError as e:
        raise DatasetError(f"failed reading {path}: {e}") from e
    return RgbImage(arr.shape[1], arr.shape[0], arr)


# ---------------------------------------------------------------------------
# Mixing-set manifest


def image_filename(index: int) -> str:
    return f"moire_{index:06d}.png"


@dataclass(frozen=True)
class ManifestEntry:
    index: int
    image_seed: int
    spec: MoireImageSpec
    content_hash: int


@dataclass(frozen=True)
class DatasetManifest:
    """Ordered record of every generated image's recipe and pixel hash."""

    master_seed: int
    count: int
    width: int
    height: int
    param_ranges: ParamRanges
    entries: tuple[ManifestEntry, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if len(self.entries) != self.count:
            raise ValueError(
                f"manifest lists {len(self.entries)} entries for count {self.count}"
            )
        for i, e in enumerate(self.entries):
            if e.index != i:
                raise ValueError(f"entry {i} carries index {e.index}; must be contiguous")

    def to_json(self) -> str:
        """Canonical JSON: UTF-8, sorted keys, no whitespace. Floats use
        Python's shortest round-trip repr, so values reload exactly."""
        obj = {
            "format": "moiredb-mixing-set",
            "version": 1,
            "master_seed": self.master_seed,
            "count": self.count,
            "width": self.width,
            "height": self.height,
            "param_ranges": {
                "nu_min": self.param_ranges.nu_min,
                "nu_max": self.param_ranges.nu_max,
                "center_min": self.param_ranges.center_min,
                "center_max": self.param_ranges.center_max,
                "q_n_choices": list(self.param_ranges.q_n_choices),
                "amplitude": self.param_ranges.amplitude,
            },
            "entries": [
                {
                    "index": e.index,
                    "image_seed": e.image_seed,
                    "content_hash": f"{e.content_hash:016x}",
                    "spec": {
                        "q_n": e.spec.q_n,
                        "width": e.spec.width,
                        "height": e.spec.height,
                        "image_seed": e.spec.image_seed,
                        "patterns": [
                            {
                                "nu": p.nu,
                                "center_x": p.center_x,
                                "center_y": p.center_y,
                                "amplitude": p.amplitude,
                            }
                            for p in e.spec.patterns
                        ],
                    },
                }
                for e in self.entries
            ],
        }
        return json.dumps(obj, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as e:
            raise DatasetError(f"manifest is not valid JSON: {e}") from e
        try:
            if obj.get("format") != "moiredb-mixing-set":
                raise DatasetError(f"not a mixing-set manifest: format={obj.get('format')!r}")
            pr = obj["param_ranges"]
            ranges = ParamRanges(
                nu_min=pr["nu_min"],
                nu_max=pr["nu_max"],
                center_min=pr["center_min"],
                center_max=pr["center_max"],
                q_n_choices=tuple(pr["q_n_choices"]),
                amplitude=pr["amplitude"],
            )
            entries = []
            for raw in obj["entries"]:
                s = raw["spec"]
                spec = MoireImageSpec(
                    q_n=s["q_n"],
                    patterns=tuple(
                        ConcentricPatternSpec(
                            p["nu"], p["center_x"], p["center_y"], p["amplitude"]
                        )
                        for p in s["patterns"]
                    ),
                    width=s["width"],
                    height=s["height"],
                    image_seed=s["image_seed"],
                )
                entries.append(
                    ManifestEntry(
                        index=raw["index"],
                        image_seed=raw["image_seed"],
                        spec=spec,
                        content_hash=int(raw["content_hash"], 16),
                    )
                )
            return cls(
                master_seed=obj["master_seed"],
                count=obj["count"],
                width=obj["width"],
                height=obj["height"],
                param_ranges=ranges,
                entries=tuple(entries),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise DatasetError(f"malformed manifest: {e}") from e


# ---------------------------------------------------------------------------
# Mixing-set generation and loading


def _build_one(
    index: int,
    master_seed: int,
    ranges: ParamRanges,
    width: int,
    height: int,
    out_dir: str,
) -> ManifestEntry:
    image_seed = derive_seed(master_seed, index)
    rng = Xoshiro256pp(image_seed)
    spec = sample_spec(rng, ranges, width, height, image_seed)
    img = generate_moire(spec)
    save_gray_png(img, Path(out_dir) / image_filename(index))
    return ManifestEntry(index, image_seed, spec, content_hash(img))


def build_mixing_set(
    master_seed: int,
    count: int,
    ranges: ParamRanges,
    width: int,
    height: int,
    out_dir,
    threads: int = 1,
) -> DatasetManifest:
    """Generate `count` fringe images into out_dir and write manifest.json.

    Each image depends only on (master_seed, index) and the ranges, so any
    thread count yields byte-identical output. The manifest is written last:
    a directory without one is not a valid mixing set, which is how aborted
    runs stay detectable.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if not 0 <= master_seed <= MASK64:
        raise ValueError("master_seed must be an unsigned 64-bit integer")
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    work = partial(
        _build_one,
        master_seed=master_seed,
        ranges=ranges,
        width=width,
        height=height,
        out_dir=str(out_path),
    )
    if threads <= 1:
        entries = [work(i) for i in range(count)]
    else:
        chunk = max(1, count // (threads * 8))
        with multiprocessing.Pool(processes=threads) as pool:
            entries = pool.map(work, range(count), chunksize=chunk)
    manifest = DatasetManifest(
        master_seed=master_seed,
        count=count,
        width=width,
        height=height,
        param_ranges=ranges,
        entries=tuple(entries),
    )
    (out_path / MANIFEST_NAME).write_text(manifest.to_json(), encoding="utf-8")
    return manifest


class MixingSet:
    """Read-only, indexable view of a mixing-set directory.

    Images load lazily by index; each load checks dimensions and, when
    verify is on, the manifest's content hash.
    """

    def __init__(self, directory, manifest: DatasetManifest, verify: bool = True):
        self.directory = Path(directory)
        self.manifest = manifest
        self.verify = verify

    def __len__(self) -> int:
        return self.manifest.count

    def image(self, index: int) -> GrayImage:
        entry = self.manifest.entries[index]
        path = self.directory / image_filename(index)
        img = load_gray_png(path)
        if (img.width, img.height) != (self.manifest.width, self.manifest.height):
            raise DatasetError(
                f"entry {index} ({path.name}): size {img.width}x{img.height} "
                f"does not match manifest {self.manifest.width}x{self.manifest.height}"
            )
        if self.verify and content_hash(img) != entry.content_hash:
            raise DatasetError(f"content hash mismatch for entry {index} ({path.name})")
        return img

    __getitem__ = image


def load_mixing_set(directory, verify: bool = True) -> MixingSet:
    """Open a mixing set; with verify=True every image is hash-checked now.

    The returned collection re-reads images lazily, so it stays memory-light
    even for full-size sets.
    """
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.is_file():
        raise DatasetError(f"missing manifest: {manifest_path}")
    manifest = DatasetManifest.from_json(manifest_path.read_text(encoding="utf-8"))
    ms = MixingSet(directory, manifest, verify=verify)
    if verify:
        for i in range(len(ms)):
            ms.image(i)
    return ms


# ---------------------------------------------------------------------------
# CIFAR binary ingestion


def read_cifar_batch(path, class_count: int) -> list[LabeledImage]:
    """Decode one CIFAR binary batch file.

    CIFAR-10 records are 1 label byte + 3072 channel-planar pixel bytes;
    CIFAR-100 records carry a coarse label byte (ignored) before the fine
    label. The file size must be an exact multiple of the record size.
    """
    if class_count == 10:
        record = CIFAR10_RECORD_BYTES
        label_col = 0
    elif class_count == 100:
        record = CIFAR100_RECORD_BYTES
        label_col = 1
    else:
        raise ValueError(f"class_count must be 10 or 100, got {class_count}")
    raw = Path(path).read_bytes()
    if len(raw) % record != 0:
        raise DatasetError(
            f"{path}: size {len(raw)} is not a multiple of the "
            f"{record}-byte record"
        )
    n = len(raw) // record
    arr = np.frombuffer(raw, dtype=np.uint8).reshape(n, record)
    labels = arr[:, label_col]
    if n and int(labels.max()) >= class_count:
        raise DatasetError(
            f"{path}: label {int(labels.max())} out of range for {class_count} classes"
        )
    planes = arr[:, record - 3072 :].reshape(n, 3, 32, 32)
    images = np.transpose(planes, (0, 2, 3, 1))
    return [
        LabeledImage(RgbImage(32, 32, np.ascontiguousarray(images[i])), int(labels[i]))
        for i in range(n)
    ]


# ---------------------------------------------------------------------------
# Augmentation over records, and augmented-dataset output


class TrainImageSampler:
    """Training records as RGB UnitImages, converted on access."""

    def __init__(self, records: list[LabeledImage]):
        self._records = records

    def __len__(self) -> int:
        return len(self._records)

    def __getitem__(self, i: int):
        return unit_from_bytes(self._records[i].image.pixels)


class MoireMixSampler:
    """Mixing-set images as grayscale UnitImages at the training resolution.

    Each source image is loaded and nearest-neighbor downscaled once, then
    cached; a full-size set costs ~1 KiB per cached 32x32 image.
    """

    def __init__(self, mixing_set: MixingSet, width: int, height: int):
        self._set = mixing_set
        self._width = width
        self._height = height
        self._cache: dict[int, object] = {}

    def __len__(self) -> int:
        return len(self._set)

    def __getitem__(self, i: int):
        unit = self._cache.get(i)
        if unit is None:
            small = resize_nearest(self._set.image(i), self._width, self._height)
            unit = unit_from_bytes(small.pixels)
            self._cache[i] = unit
        return unit


def augment_records(
    records: list[LabeledImage],
    mixing_set: MixingSet,
    seed: int,
    config: MixConfig,
) -> list[LabeledImage]:
    """Augment every record once.

    Record i draws from its own stream seeded with derive_seed(seed, i), so
    the result is independent of iteration or worker order. Partners come
    from the full record list (self-mixing allowed) or from the mixing set.
    """
    if not records:
        return []
    w, h = records[0].image.width, records[0].image.height
    train = TrainImageSampler(records)
    moire = MoireMixSampler(mixing_set, w, h)
    out = []
    for i, rec in enumerate(records):
        rng = Xoshiro256pp(derive_seed(seed, i))
        mixed = pixmix_augment(
            unit_from_bytes(rec.image.pixels), train, moire, rng, config
        )
        out.append(LabeledImage(RgbImage(w, h, unit_to_bytes(mixed)), rec.label))
    return out


def augmented_filename(index: int) -> str:
    return f"img_{index:06d}.png"


def write_augmented_dataset(
    records: list[LabeledImage], out_dir, seed: int, config: MixConfig
) -> dict:
    """Write augmented records as PNGs plus labels.txt and a provenance
    header recording the seed and mix knobs.

    With no records only the header is written. The header goes last, as the
    completion marker.
    """
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    for i, rec in enumerate(records):
        save_rgb_png(rec.image, out_path / augmented_filename(i))
    if records:
        (out_path / LABELS_NAME).write_text(
            "\n".join(str(r.label) for r in records) + "\n", encoding="utf-8"
        )
    header = {
        "format": "moiredb-augmented",
        "version": 1,
        "seed": seed,
        "count": len(records),
        "mix_config": {
            "k_max": config.k_max,
            "beta_shape": config.beta_shape,
            "p_mixer_from_set": config.p_mixer_from_set,
            "p_additive": config.p_additive,
            "mult_floor": config.mult_floor,
        },
    }
    if records:
        header["width"] = records[0].image.width
        header["height"] = records[0].image.height
    header_path = out_path / HEADER_NAME
    header_path.write_text(
        json.dumps(header, sort_keys=True, separators=(",", ":")), encoding="utf-8"
    )
    return {"out_dir": str(out_path), "count": len(records), "header": str(header_path)}
