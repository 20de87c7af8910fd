"""Toy-scale training with optional fringe-image mixing.

Deliberately scaled down from a full robustness benchmark: a small residual
net, a training subset, and a few epochs. Only the *direction* of the
augmentation effect is meaningful at this scale.

All per-sample randomness (standard crop/flip plus the mixing pipeline)
comes from a stream seeded by (run seed, epoch, sample index), so batch
composition, worker counts, and evaluation order cannot change results.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from .datasets import load_cifar10_train
from .mirror import MixingSetReader, Stream, augment_one, derive_seed, quantize
from .model import SmallResNet

AUGMENTATIONS = ("none", "pixmix_moire")


@dataclass
class EvalConfig:
    """Everything one ablation run needs."""

    cifar_dir: str
    cifar_c_dir: str
    mixing_set_dir: str | None = None
    subset_size: int = 10000
    epochs: int = 10
    model: str = "small_resnet"
    seeds: tuple[int, ...] = (0, 1, 2)
    k_max: int = 5
    beta_shape: float = 3.0
    p_moire: float = 0.5
    p_additive: float = 0.5
    mult_floor: float = 1e-3
    fgsm_epsilon: float = 2.0 / 255.0
    batch_size: int = 128
    lr: float = 0.05
    momentum: float = 0.9
    weight_decay: float = 5e-4
    device: str = "auto"

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.subset_size < 1:
            raise ValueError(f"subset_size must be >= 1, got {self.subset_size}")

    def resolve_device(self) -> str:
        if self.device != "auto":
            return self.device
        return "cuda" if torch.cuda.is_available() else "cpu"


def _standard_augment(image: np.ndarray, rng: Stream) -> np.ndarray:
    """Pad-4 random crop + horizontal flip, both drawn from the stream."""
    dx = rng.below(9)
    dy = rng.below(9)
    flip = rng.coin(0.5)
    padded = np.pad(image, ((4, 4), (4, 4), (0, 0)), mode="reflect")
    out = padded[dy : dy + 32, dx : dx + 32]
    if flip:
        out = out[:, ::-1]
    return np.ascontiguousarray(out)


class AugmentedArrayDataset(torch.utils.data.Dataset):
    """In-memory CIFAR subset with deterministic per-sample augmentation.

    The sample stream is seeded from (seed, epoch, index); call set_epoch()
    before each pass. Mixing (when enabled) continues on the same stream
    after the standard crop/flip draws.
    """

    def __init__(self, images, labels, seed, mixing: MixingSetReader | None, cfg: EvalConfig):
        self.images = images
        self.labels = labels
        self.seed = seed
        self.mixing = mixing
        self.cfg = cfg
        self.epoch = 0

    def set_epoch(self, epoch: int) -> None:
        self.epoch = epoch

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, index: int):
        rng = Stream(derive_seed(derive_seed(self.seed, self.epoch), index))
        image = _standard_augment(self.images[index], rng)
        if self.mixing is not None:
            unit = image.astype(np.float64) / 255.0
            unit = augment_one(
                unit,
                self.images,
                self.mixing,
                rng,
                self.cfg.k_max,
                self.cfg.beta_shape,
                self.cfg.p_moire,
                self.cfg.p_additive,
                self.cfg.mult_floor,
            )
            image = quantize(unit)
        tensor = torch.from_numpy(image.astype(np.float32) / 255.0).permute(2, 0, 1)
        return tensor, int(self.labels[index])


@dataclass
class TrainResult:
    model: torch.nn.Module
    log: list = field(default_factory=list)
    step_losses: list = field(default_factory=list)


def train_toy(
    config: EvalConfig, augmentation: str, seed: int, checkpoint_path=None
) -> TrainResult:
    """Train the small net once; returns the model plus a per-epoch log.

    When checkpoint_path is given, the weights and the log are saved there
    (plus a .log.json sidecar).
    """
    if augmentation not in AUGMENTATIONS:
        raise ValueError(f"augmentation must be one of {AUGMENTATIONS}")
    device = config.resolve_device()
    images, labels = load_cifar10_train(config.cifar_dir, config.subset_size)
    mixing = None
    if augmentation == "pixmix_moire":
        if config.mixing_set_dir is None:
            raise ValueError("pixmix_moire needs mixing_set_dir")
        mixing = MixingSetReader(config.mixing_set_dir, 32, 32)
    dataset = AugmentedArrayDataset(images, labels, seed, mixing, config)

    torch.manual_seed(seed)
    model = SmallResNet().to(device)
    optimizer = torch.optim.SGD(
        model.parameters(),
        lr=config.lr,
        momentum=config.momentum,
        weight_decay=config.weight_decay,
    )
    scheduler = torch.optim.lr_scheduler.CosineAnnealingLR(optimizer, T_max=config.epochs)

    result = TrainResult(model=model)
    order_root = derive_seed(seed, 0xE90C)
    for epoch in range(config.epochs):
        dataset.set_epoch(epoch)
        order = np.random.default_rng(derive_seed(order_root, epoch)).permutation(
            len(dataset)
        )
        model.train()
        epoch_loss = 0.0
        correct = 0
        start = time.perf_counter()
        for batch_start in range(0, len(order), config.batch_size):
            idx = order[batch_start : batch_start + config.batch_size]
            batch = [dataset[int(i)] for i in idx]
            x = torch.stack([b[0] for b in batch]).to(device)
            y = torch.tensor([b[1] for b in batch], device=device)
            optimizer.zero_grad()
            logits = model(x)
            loss = F.cross_entropy(logits, y)
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss.detach()) * len(idx)
            correct += int((logits.argmax(1) == y).sum())
            if epoch == 0:
                result.step_losses.append(float(loss.detach()))
        scheduler.step()
        result.log.append(
            {
                "epoch": epoch,
                "loss": epoch_loss / len(dataset),
                "accuracy": correct / len(dataset),
                "seconds": time.perf_counter() - start,
            }
        )
    if checkpoint_path is not None:
        save_checkpoint(result, config, augmentation, seed, checkpoint_path)
    return result


def save_checkpoint(result: TrainResult, config: EvalConfig, augmentation: str,
                    seed: int, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(
        {
            "state_dict": result.model.state_dict(),
            "augmentation": augmentation,
            "seed": seed,
            "log": result.log,
        },
        path,
    )
    path.with_suffix(".log.json").write_text(
        json.dumps({"augmentation": augmentation, "seed": seed, "log": result.log}, indent=2)
    )
