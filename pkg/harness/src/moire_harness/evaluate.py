"""Robustness evaluation: corruption error over the 15 CIFAR-C categories
(their mean is the mCE) and single-step FGSM adversarial error."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

from .datasets import CORRUPTIONS, corruption_arrays


@dataclass(frozen=True)
class CorruptionReport:
    """Per-corruption top-1 error (%), their mean, and adversarial error."""

    per_corruption: dict
    mce: float
    adversarial_error: float | None = None

    def __post_init__(self):
        for name, err in self.per_corruption.items():
            if not 0.0 <= err <= 100.0:
                raise ValueError(f"{name}: error {err} outside [0, 100]")
        expected = sum(self.per_corruption.values()) / len(self.per_corruption)
        if abs(self.mce - expected) > 1e-9:
            raise ValueError(f"mce {self.mce} is not the mean {expected}")


def _batched_error(model, images, labels, device, batch_size=512, limit=None) -> float:
    """Top-1 error % of the model over uint8 (n, 32, 32, 3) images."""
    model.eval()
    n = len(labels) if limit is None else min(limit, len(labels))
    wrong = 0
    with torch.no_grad():
        for start in range(0, n, batch_size):
            stop = min(start + batch_size, n)
            # np.array copies; corruption files are read-only mmaps
            x = (
                torch.from_numpy(np.array(images[start:stop]))
                .to(device)
                .permute(0, 3, 1, 2)
                .float()
                / 255.0
            )
            y = torch.from_numpy(np.array(labels[start:stop])).long().to(device)
            wrong += int((model(x).argmax(1) != y).sum())
    return 100.0 * wrong / n


def eval_corruptions(
    model, cifar_c_dir, device="cpu", batch_size=512, limit_per_corruption=None
) -> CorruptionReport:
    """Error per corruption type (averaged over the severities stored in
    each file) and their mean."""
    per = {}
    for name in CORRUPTIONS:
        images, labels = corruption_arrays(cifar_c_dir, name)
        per[name] = _batched_error(
            model, images, labels, device, batch_size, limit_per_corruption
        )
    mce = sum(per.values()) / len(per)
    return CorruptionReport(per_corruption=per, mce=mce)


def eval_adversarial(
    model, images, labels, epsilon, device="cpu", batch_size=256, limit=None
) -> float:
    """Top-1 error % under single-step FGSM in pixel space.

    epsilon is in [0, 1] pixel units (e.g. 2/255). epsilon = 0 reproduces
    the clean error exactly.
    """
    model.eval()
    n = len(labels) if limit is None else min(limit, len(labels))
    wrong = 0
    for start in range(0, n, batch_size):
        stop = min(start + batch_size, n)
        x = (
            torch.from_numpy(np.array(images[start:stop]))
            .to(device)
            .permute(0, 3, 1, 2)
            .float()
            / 255.0
        )
        y = torch.from_numpy(np.array(labels[start:stop])).long().to(device)
        x.requires_grad_(True)
        loss = F.cross_entropy(model(x), y)
        (grad,) = torch.autograd.grad(loss, x)
        x_adv = torch.clamp(x.detach() + epsilon * grad.sign(), 0.0, 1.0)
        with torch.no_grad():
            wrong += int((model(x_adv).argmax(1) != y).sum())
    return 100.0 * wrong / n
