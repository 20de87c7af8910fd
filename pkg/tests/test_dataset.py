import json
from pathlib import Path

import numpy as np
import pytest

from moiredb import (
    DatasetError,
    DatasetManifest,
    LabeledImage,
    MixConfig,
    MoireMixSampler,
    ParamRanges,
    RgbImage,
    augment_records,
    build_mixing_set,
    content_hash,
    dataset_hash,
    fnv1a64,
    generate_moire,
    load_gray_png,
    load_mixing_set,
    load_rgb_png,
    read_cifar_batch,
    save_gray_png,
    save_rgb_png,
    write_augmented_dataset,
)
from moiredb.dataset import _fnv1a64_jit, _fnv1a64_py, image_filename
from moiredb.moire import GrayImage

from conftest import make_cifar_file


def _tree_bytes(root):
    return {
        p.relative_to(root).as_posix(): p.read_bytes()
        for p in sorted(Path(root).rglob("*"))
        if p.is_file()
    }


# ---------------------------------------------------------------------------
# hashing


def test_fnv1a64_published_vectors():
    assert fnv1a64(b"") == 0xCBF29CE484222325
    assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C
    assert fnv1a64(b"foobar") == 0x85944171F73967E8


def test_fnv1a64_array_and_bytes_agree():
    arr = np.random.default_rng(0).integers(0, 256, 4096, dtype=np.uint8)
    assert fnv1a64(arr) == fnv1a64(arr.tobytes())
    assert fnv1a64(arr) == _fnv1a64_py(arr.tobytes())


@pytest.mark.skipif(_fnv1a64_jit is None, reason="numba not installed")
def test_fnv1a64_jit_matches_python():
    for n in (0, 1, 7, 1024):
        arr = np.random.default_rng(n).integers(0, 256, n, dtype=np.uint8)
        assert int(_fnv1a64_jit(arr)) == _fnv1a64_py(arr.tobytes())


# ---------------------------------------------------------------------------
# PNG round trips


def test_gray_png_roundtrip(tmp_path):
    pixels = np.random.default_rng(1).integers(0, 256, (20, 30), dtype=np.uint8)
    img = GrayImage(30, 20, pixels)
    save_gray_png(img, tmp_path / "x.png")
    assert load_gray_png(tmp_path / "x.png") == img


def test_rgb_png_roundtrip(tmp_path):
    pixels = np.random.default_rng(2).integers(0, 256, (20, 30, 3), dtype=np.uint8)
    img = RgbImage(30, 20, pixels)
    save_rgb_png(img, tmp_path / "x.png")
    assert load_rgb_png(tmp_path / "x.png") == img


def test_load_gray_rejects_rgb(tmp_path):
    pixels = np.zeros((4, 4, 3), dtype=np.uint8)
    save_rgb_png(RgbImage(4, 4, pixels), tmp_path / "x.png")
    with pytest.raises(DatasetError, match="grayscale"):
        load_gray_png(tmp_path / "x.png")


# ---------------------------------------------------------------------------
# manifest


def test_manifest_json_roundtrip(small_mixing_set):
    _, manifest = small_mixing_set
    text = manifest.to_json()
    again = DatasetManifest.from_json(text)
    assert again == manifest
    assert again.to_json() == text
    # canonical form: sorted keys, no whitespace
    assert json.loads(text) == json.loads(again.to_json())
    assert ": " not in text


def test_manifest_rejects_bad_index_order(small_mixing_set):
    _, manifest = small_mixing_set
    entries = (manifest.entries[1], manifest.entries[0]) + manifest.entries[2:]
    with pytest.raises(ValueError, match="contiguous"):
        DatasetManifest(
            manifest.master_seed,
            manifest.count,
            manifest.width,
            manifest.height,
            manifest.param_ranges,
            entries,
        )


def test_manifest_rejects_garbage():
    with pytest.raises(DatasetError):
        DatasetManifest.from_json("not json at all")
    with pytest.raises(DatasetError):
        DatasetManifest.from_json('{"format": "something-else"}')


# ---------------------------------------------------------------------------
# mixing-set build / load / verify


def test_build_single_image_roundtrips(tmp_path):
    manifest = build_mixing_set(3, 1, ParamRanges(), 48, 48, tmp_path)
    assert manifest.count == 1
    entry = manifest.entries[0]
    stored = load_gray_png(tmp_path / image_filename(0))
    assert content_hash(stored) == entry.content_hash
    assert generate_moire(entry.spec) == stored


def test_build_is_deterministic(tmp_path):
    build_mixing_set(11, 3, ParamRanges(), 32, 32, tmp_path / "a")
    build_mixing_set(11, 3, ParamRanges(), 32, 32, tmp_path / "b")
    assert _tree_bytes(tmp_path / "a") == _tree_bytes(tmp_path / "b")


def test_build_parallel_matches_serial(tmp_path):
    build_mixing_set(13, 6, ParamRanges(), 32, 32, tmp_path / "serial", threads=1)
    build_mixing_set(13, 6, ParamRanges(), 32, 32, tmp_path / "pool", threads=3)
    assert _tree_bytes(tmp_path / "serial") == _tree_bytes(tmp_path / "pool")


def test_build_rejects_zero_count(tmp_path):
    with pytest.raises(ValueError):
        build_mixing_set(0, 0, ParamRanges(), 32, 32, tmp_path)


def test_load_mixing_set_roundtrip(small_mixing_set):
    directory, manifest = small_mixing_set
    ms = load_mixing_set(directory)
    assert len(ms) == manifest.count
    for i, entry in enumerate(manifest.entries):
        assert content_hash(ms[i]) == entry.content_hash


def test_load_detects_tampered_pixel(tmp_path):
    build_mixing_set(5, 2, ParamRanges(), 32, 32, tmp_path)
    target = tmp_path / image_filename(1)
    img = load_gray_png(target)
    pixels = img.pixels.copy()
    pixels[3, 3] ^= 0xFF
    save_gray_png(GrayImage(32, 32, pixels), target)
    with pytest.raises(DatasetError, match="entry 1"):
        load_mixing_set(tmp_path)


def test_load_missing_manifest(tmp_path):
    with pytest.raises(DatasetError, match="missing manifest"):
        load_mixing_set(tmp_path)


def test_load_missing_image(tmp_path):
    build_mixing_set(5, 2, ParamRanges(), 32, 32, tmp_path)
    (tmp_path / image_filename(0)).unlink()
    with pytest.raises(FileNotFoundError):
        load_mixing_set(tmp_path)


def test_dataset_hash_changes_with_content(small_mixing_set):
    _, manifest = small_mixing_set
    h = dataset_hash(manifest)
    assert h != 0
    # same entries, same hash
    again = DatasetManifest(
        manifest.master_seed,
        manifest.count,
        manifest.width,
        manifest.height,
        manifest.param_ranges,
        manifest.entries,
    )
    assert dataset_hash(again) == h


# ---------------------------------------------------------------------------
# CIFAR ingestion


def test_cifar10_zero_records(tmp_path):
    path = tmp_path / "zeros.bin"
    path.write_bytes(bytes(3073 * 10))
    records = read_cifar_batch(path, 10)
    assert len(records) == 10
    for rec in records:
        assert rec.label == 0
        assert rec.image.width == rec.image.height == 32
        assert not rec.image.pixels.any()


def test_cifar10_plane_values(tmp_path):
    # one crafted record: R plane all 1, G plane all 2, B plane all 3
    payload = bytes([7]) + bytes([1] * 1024) + bytes([2] * 1024) + bytes([3] * 1024)
    path = tmp_path / "planes.bin"
    path.write_bytes(payload)
    [rec] = read_cifar_batch(path, 10)
    assert rec.label == 7
    assert np.all(rec.image.pixels == np.array([1, 2, 3], dtype=np.uint8))


def test_cifar10_truncated_file(tmp_path):
    path = tmp_path / "trunc.bin"
    path.write_bytes(bytes(3073 * 2 - 1))
    with pytest.raises(DatasetError, match="not a multiple"):
        read_cifar_batch(path, 10)


def test_cifar100_ignores_coarse_label(tmp_path):
    payload = bytes([19, 42]) + bytes(3072)
    path = tmp_path / "c100.bin"
    path.write_bytes(payload)
    [rec] = read_cifar_batch(path, 100)
    assert rec.label == 42


def test_cifar_rejects_out_of_range_label(tmp_path):
    payload = bytes([200]) + bytes(3072)
    path = tmp_path / "bad.bin"
    path.write_bytes(payload)
    with pytest.raises(DatasetError, match="out of range"):
        read_cifar_batch(path, 10)


def test_cifar_rejects_bad_class_count(tmp_path):
    path = tmp_path / "x.bin"
    path.write_bytes(bytes(3073))
    with pytest.raises(ValueError):
        read_cifar_batch(path, 42)


# ---------------------------------------------------------------------------
# augmentation over records + augmented output


def test_augment_records_empty(small_mixing_set):
    directory, _ = small_mixing_set
    ms = load_mixing_set(directory, verify=False)
    assert augment_records([], ms, 0, MixConfig()) == []


def test_augment_records_deterministic(tmp_path, small_mixing_set):
    directory, _ = small_mixing_set
    ms = load_mixing_set(directory, verify=False)
    records = read_cifar_batch(make_cifar_file(tmp_path / "c.bin", 6, seed=4), 10)
    a = augment_records(records, ms, 21, MixConfig())
    b = augment_records(records, ms, 21, MixConfig())
    assert a == b
    c = augment_records(records, ms, 22, MixConfig())
    assert a != c


def test_augment_records_kmax0_identity(tmp_path, small_mixing_set):
    directory, _ = small_mixing_set
    ms = load_mixing_set(directory, verify=False)
    records = read_cifar_batch(make_cifar_file(tmp_path / "c.bin", 3, seed=5), 10)
    out = augment_records(records, ms, 9, MixConfig(k_max=0))
    assert out == records


def test_moire_sampler_resizes_and_caches(small_mixing_set):
    directory, manifest = small_mixing_set
    ms = load_mixing_set(directory, verify=False)
    sampler = MoireMixSampler(ms, 32, 32)
    unit = sampler[0]
    assert (unit.width, unit.height, unit.channels) == (32, 32, 1)
    assert sampler[0] is unit  # cached


def test_write_augmented_empty_writes_header_only(tmp_path):
    out = tmp_path / "aug"
    summary = write_augmented_dataset([], out, 3, MixConfig())
    assert summary["count"] == 0
    files = sorted(p.name for p in out.iterdir())
    assert files == ["header.json"]
    header = json.loads((out / "header.json").read_text())
    assert header["count"] == 0
    assert header["mix_config"]["k_max"] == 5


def test_write_augmented_single_record(tmp_path):
    pixels = np.random.default_rng(8).integers(0, 256, (32, 32, 3), dtype=np.uint8)
    rec = LabeledImage(RgbImage(32, 32, pixels), 4)
    out = tmp_path / "aug"
    summary = write_augmented_dataset([rec], out, 3, MixConfig())
    assert summary["count"] == 1
    assert (out / "labels.txt").read_text() == "4\n"
    assert load_rgb_png(out / "img_000000.png") == rec.image


def test_write_augmented_rerun_identical(tmp_path):
    pixels = np.random.default_rng(9).integers(0, 256, (32, 32, 3), dtype=np.uint8)
    records = [LabeledImage(RgbImage(32, 32, pixels), i) for i in range(3)]
    write_augmented_dataset(records, tmp_path / "a", 3, MixConfig())
    write_augmented_dataset(records, tmp_path / "b", 3, MixConfig())
    assert _tree_bytes(tmp_path / "a") == _tree_bytes(tmp_path / "b")
