"""Dataset access for the harness: CIFAR binary batches and CIFAR-10-C files.

CIFAR-10-C ships as one .npy per corruption, shape (50000, 32, 32, 3): five
severity blocks of the 10,000 test images, plus a labels.npy. We read with
mmap so evaluating 15 corruptions stays memory-light.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .mirror import read_cifar

CIFAR10_TRAIN_FILES = [f"data_batch_{i}.bin" for i in range(1, 6)]
CIFAR10_TEST_FILE = "test_batch.bin"

CORRUPTIONS = (
    "gaussian_noise",
    "shot_noise",
    "impulse_noise",
    "defocus_blur",
    "glass_blur",
    "motion_blur",
    "zoom_blur",
    "snow",
    "frost",
    "fog",
    "brightness",
    "contrast",
    "elastic_transform",
    "pixelate",
    "jpeg_compression",
)


def load_cifar10_train(cifar_dir, subset_size: int | None = None):
    """Concatenate the five binary train batches; optionally truncate."""
    images, labels = [], []
    for name in CIFAR10_TRAIN_FILES:
        path = Path(cifar_dir) / name
        if not path.is_file():
            raise FileNotFoundError(f"missing CIFAR batch: {path}")
        imgs, labs = read_cifar(path, 10)
        images.append(imgs)
        labels.append(labs)
        if subset_size is not None and sum(len(x) for x in labels) >= subset_size:
            break
    images = np.concatenate(images)
    labels = np.concatenate(labels)
    if subset_size is not None:
        if subset_size > len(labels):
            raise ValueError(
                f"subset_size {subset_size} exceeds dataset size {len(labels)}"
            )
        images, labels = images[:subset_size], labels[:subset_size]
    return images, labels


def load_cifar10_test(cifar_dir, limit: int | None = None):
    path = Path(cifar_dir) / CIFAR10_TEST_FILE
    if not path.is_file():
        raise FileNotFoundError(f"missing CIFAR test batch: {path}")
    images, labels = read_cifar(path, 10)
    if limit is not None:
        images, labels = images[:limit], labels[:limit]
    return images, labels


def corruption_arrays(cifar_c_dir, name: str):
    """Memory-mapped (images, labels) for one corruption type."""
    root = Path(cifar_c_dir)
    images_path = root / f"{name}.npy"
    labels_path = root / "labels.npy"
    if not images_path.is_file():
        raise FileNotFoundError(f"missing corruption file: {images_path}")
    if not labels_path.is_file():
        raise FileNotFoundError(f"missing labels file: {labels_path}")
    images = np.load(images_path, mmap_mode="r")
    labels = np.load(labels_path, mmap_mode="r")
    if len(images) != len(labels):
        raise ValueError(
            f"{name}: {len(images)} images but {len(labels)} labels"
        )
    return images, labels
