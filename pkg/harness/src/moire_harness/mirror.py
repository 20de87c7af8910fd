"""Independent reimplementation of the moiredb mixing pipeline.

Written against the published determinism protocol (primary README), not
against the primary's source, and deliberately importing nothing from it.
Byte-for-byte agreement between this module and the `moiredb mix` command is
the harness's strongest guard against drift between the two components.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

U64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & U64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & U64
    return z ^ (z >> 31)


def derive_seed(master: int, index: int) -> int:
    """(index+1)-th SplitMix64 output for the master seed."""
    return mix64((master + (index + 1) * GAMMA) & U64)


class Stream:
    """xoshiro256++ stream with the protocol's draw helpers."""

    def __init__(self, seed: int):
        s = seed & U64
        words = []
        for _ in range(4):
            s = (s + GAMMA) & U64
            words.append(mix64(s))
        self.s = words

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self.s
        tmp = (s0 + s3) & U64
        out = ((((tmp << 23) | (tmp >> 41)) & U64) + s0) & U64
        t = (s1 << 17) & U64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = ((s3 << 45) | (s3 >> 19)) & U64
        self.s = [s0, s1, s2, s3]
        return out

    def uniform01(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.uniform01()

    def below(self, n: int) -> int:
        return (self.next_u64() * n) >> 64

    def coin(self, p: float) -> bool:
        return self.uniform01() < p

    def beta(self, alpha: float, beta: float) -> float:
        while True:
            x = self.uniform01() ** (1.0 / alpha)
            y = self.uniform01() ** (1.0 / beta)
            s = x + y
            if 0.0 < s <= 1.0:
                return x / s


def draw_coefficients(rng: Stream, shape: float) -> tuple[float, float]:
    """Branch coin, then a, then b, per the protocol."""
    if rng.coin(0.5):
        return rng.beta(shape, 1.0), rng.beta(1.0, shape)
    return 1.0 + rng.beta(1.0, shape), -rng.beta(1.0, shape)


def additive(base: np.ndarray, mixer: np.ndarray, a: float, b: float) -> np.ndarray:
    out = a * (base * 2.0 - 1.0) + b * (mixer * 2.0 - 1.0)
    return np.clip((out + 1.0) * 0.5, 0.0, 1.0)


def multiplicative(
    base: np.ndarray, mixer: np.ndarray, a: float, b: float, floor: float
) -> np.ndarray:
    bb = np.maximum(base * 2.0, floor)
    mm = np.maximum(mixer * 2.0, floor)
    return np.clip((bb**a) * (mm**b) * 0.5, 0.0, 1.0)


def resize_nearest(pixels: np.ndarray, dst_w: int, dst_h: int) -> np.ndarray:
    src_h, src_w = pixels.shape[:2]
    xs = (np.arange(dst_w, dtype=np.int64) * src_w) // dst_w
    ys = (np.arange(dst_h, dtype=np.int64) * src_h) // dst_h
    return pixels[ys[:, None], xs[None, :]]


def quantize(values: np.ndarray) -> np.ndarray:
    return np.clip(np.floor(values * 255.0 + 0.5), 0.0, 255.0).astype(np.uint8)


def read_cifar(path, classes: int) -> tuple[np.ndarray, np.ndarray]:
    """Return (images uint8 (n,32,32,3), labels int64 (n,))."""
    record = 3073 if classes == 10 else 3074
    raw = np.fromfile(str(path), dtype=np.uint8)
    if raw.size % record:
        raise ValueError(f"{path}: not a whole number of {record}-byte records")
    rows = raw.reshape(-1, record)
    labels = rows[:, 0 if classes == 10 else 1].astype(np.int64)
    images = rows[:, record - 3072 :].reshape(-1, 3, 32, 32).transpose(0, 2, 3, 1)
    return np.ascontiguousarray(images), labels


class MixingSetReader:
    """Lazy reader over a mixing-set directory written by the primary.

    Images are loaded from PNG on first use and cached already downscaled
    to the target size, as [0, 1] float arrays of shape (h, w, 1).
    """

    def __init__(self, directory, width: int, height: int):
        self.directory = Path(directory)
        manifest = json.loads((self.directory / "manifest.json").read_text("utf-8"))
        if manifest.get("format") != "moiredb-mixing-set":
            raise ValueError(f"{directory}: not a mixing-set manifest")
        self.count = int(manifest["count"])
        self.width = width
        self.height = height
        self._cache: dict[int, np.ndarray] = {}

    def __len__(self) -> int:
        return self.count

    def get(self, index: int) -> np.ndarray:
        unit = self._cache.get(index)
        if unit is None:
            path = self.directory / f"moire_{index:06d}.png"
            with Image.open(path) as im:
                pixels = np.asarray(im, dtype=np.uint8)
            small = resize_nearest(pixels, self.width, self.height)
            unit = small.astype(np.float64)[:, :, None] / 255.0
            self._cache[index] = unit
        return unit


def augment_one(
    image: np.ndarray,
    train_images: np.ndarray,
    mixing: MixingSetReader,
    rng: Stream,
    k_max: int = 5,
    beta_shape: float = 3.0,
    p_moire: float = 0.5,
    p_additive: float = 0.5,
    mult_floor: float = 1e-3,
) -> np.ndarray:
    """One record through the pipeline; image is float64 (h, w, 3) in [0, 1]."""
    out = image
    for _ in range(rng.below(k_max + 1)):
        from_moire = rng.coin(p_moire)
        if from_moire:
            partner = mixing.get(rng.below(len(mixing)))
        else:
            partner = train_images[rng.below(len(train_images))].astype(np.float64) / 255.0
        if rng.coin(p_additive):
            a, b = draw_coefficients(rng, beta_shape)
            out = additive(out, partner, a, b)
        else:
            a, b = draw_coefficients(rng, beta_shape)
            out = multiplicative(out, partner, a, b, mult_floor)
    return out


def augment_cifar(
    cifar_path,
    classes: int,
    mixing_set_dir,
    seed: int,
    k_max: int = 5,
    beta_shape: float = 3.0,
    p_moire: float = 0.5,
    p_additive: float = 0.5,
    mult_floor: float = 1e-3,
) -> tuple[np.ndarray, np.ndarray]:
    """Mirror of `moiredb mix`: returns (augmented uint8 (n,32,32,3), labels)."""
    images, labels = read_cifar(cifar_path, classes)
    mixing = MixingSetReader(mixing_set_dir, 32, 32)
    out = np.empty_like(images)
    for i in range(len(images)):
        rng = Stream(derive_seed(seed, i))
        unit = images[i].astype(np.float64) / 255.0
        mixed = augment_one(
            unit, images, mixing, rng, k_max, beta_shape, p_moire, p_additive, mult_floor
        )
        out[i] = quantize(mixed)
    return out, labels
