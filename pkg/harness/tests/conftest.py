import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

PRIMARY = [sys.executable, "-m", "moiredb"]


def run_primary(*args):
    return subprocess.run(
        [*PRIMARY, *map(str, args)], capture_output=True, text=True
    )


def make_cifar_file(path, n, class_count=10, seed=0):
    rng = np.random.default_rng(seed)
    chunks = []
    for i in range(n):
        head = (
            bytes([i % class_count])
            if class_count == 10
            else bytes([i % 20, i % class_count])
        )
        chunks.append(head + rng.integers(0, 256, 3072, dtype=np.uint8).tobytes())
    Path(path).write_bytes(b"".join(chunks))
    return Path(path)


def make_synthetic_train(path_dir, n_per_batch=128, seed=0):
    """Five tiny 'data_batch_*.bin' files with learnable class structure:
    class c images are noisy constant patches around a class-specific color."""
    rng = np.random.default_rng(seed)
    path_dir = Path(path_dir)
    path_dir.mkdir(parents=True, exist_ok=True)
    base_colors = rng.integers(30, 226, size=(10, 3))
    for b in range(1, 6):
        chunks = []
        for i in range(n_per_batch):
            label = int(rng.integers(0, 10))
            color = base_colors[label]
            img = np.clip(
                color[None, None, :] + rng.normal(0, 25, (32, 32, 3)), 0, 255
            ).astype(np.uint8)
            planes = img.transpose(2, 0, 1).reshape(-1)
            chunks.append(bytes([label]) + planes.tobytes())
        (path_dir / f"data_batch_{b}.bin").write_bytes(b"".join(chunks))
    # matching test batch from the same distribution
    chunks = []
    for i in range(n_per_batch):
        label = int(rng.integers(0, 10))
        color = base_colors[label]
        img = np.clip(
            color[None, None, :] + rng.normal(0, 25, (32, 32, 3)), 0, 255
        ).astype(np.uint8)
        chunks.append(bytes([label]) + img.transpose(2, 0, 1).tobytes())
    (path_dir / "test_batch.bin").write_bytes(b"".join(chunks))
    return path_dir, base_colors


def make_synthetic_cifar_c(path_dir, n=100, seed=1):
    """Tiny CIFAR-C-style directory: all 15 corruption .npy files plus
    labels.npy, with balanced labels so a constant classifier errs 90%."""
    from moire_harness.datasets import CORRUPTIONS

    rng = np.random.default_rng(seed)
    path_dir = Path(path_dir)
    path_dir.mkdir(parents=True, exist_ok=True)
    labels = np.arange(n) % 10
    np.save(path_dir / "labels.npy", labels)
    for name in CORRUPTIONS:
        images = rng.integers(0, 256, (n, 32, 32, 3), dtype=np.uint8)
        np.save(path_dir / f"{name}.npy", images)
    return path_dir, labels


@pytest.fixture(scope="session")
def fixture_mixing_set(tmp_path_factory):
    """Small mixing set generated through the primary CLI (64x64 to stay fast)."""
    out = tmp_path_factory.mktemp("parity_ms") / "ms"
    res = run_primary(
        "generate", "--out", out, "--count", 4, "--seed", 3, "--size", 64
    )
    assert res.returncode == 0, res.stderr
    return out


@pytest.fixture(scope="session")
def fixture_cifar(tmp_path_factory):
    return make_cifar_file(tmp_path_factory.mktemp("parity_cifar") / "cifar.bin", 8, seed=5)
