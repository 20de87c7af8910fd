"""Ablation report: train with and without fringe mixing over several seeds,
evaluate robustness, and emit JSON shaped like the published results tables
(one row per augmentation strategy, columns per corruption plus mCE and
adversarial error)."""

from __future__ import annotations

import json
from pathlib import Path

from .datasets import load_cifar10_test
from .evaluate import eval_adversarial, eval_corruptions
from .train import AUGMENTATIONS, EvalConfig, train_toy


def run_ablation(
    config: EvalConfig,
    limit_per_corruption=None,
    adv_limit=None,
    checkpoint_dir=None,
) -> dict:
    """Full directional study: every augmentation x every seed."""
    device = config.resolve_device()
    test_images, test_labels = load_cifar10_test(config.cifar_dir)
    rows = []
    for augmentation in AUGMENTATIONS:
        for seed in config.seeds:
            checkpoint = (
                Path(checkpoint_dir) / f"{augmentation}_seed{seed}.pt"
                if checkpoint_dir
                else None
            )
            result = train_toy(config, augmentation, seed, checkpoint_path=checkpoint)
            report = eval_corruptions(
                result.model,
                config.cifar_c_dir,
                device=device,
                limit_per_corruption=limit_per_corruption,
            )
            adv = eval_adversarial(
                result.model,
                test_images,
                test_labels,
                config.fgsm_epsilon,
                device=device,
                limit=adv_limit,
            )
            rows.append(
                {
                    "augmentation": augmentation,
                    "seed": seed,
                    "corruptions": report.per_corruption,
                    "mce": report.mce,
                    "adversarial_error": adv,
                    "final_train_accuracy": result.log[-1]["accuracy"],
                }
            )
    return {
        "dataset": "CIFAR-10",
        "protocol": {
            "subset_size": config.subset_size,
            "epochs": config.epochs,
            "model": config.model,
            "seeds": list(config.seeds),
            "fgsm_epsilon": config.fgsm_epsilon,
            "note": "toy-scale ablation; only the direction of the effect is meaningful",
        },
        "rows": rows,
        "summary": summarize(rows),
    }


def summarize(rows) -> dict:
    """Per-augmentation mean mCE and the per-seed win count for the mixing run."""
    by_aug: dict = {}
    for row in rows:
        by_aug.setdefault(row["augmentation"], {})[row["seed"]] = row["mce"]
    summary = {
        aug: {
            "mean_mce": sum(seeds.values()) / len(seeds),
            "per_seed_mce": seeds,
        }
        for aug, seeds in by_aug.items()
    }
    if "none" in by_aug and "pixmix_moire" in by_aug:
        wins = sum(
            1
            for seed, mce in by_aug["pixmix_moire"].items()
            if seed in by_aug["none"] and mce < by_aug["none"][seed]
        )
        summary["moire_wins_seeds"] = wins
        summary["total_seeds"] = len(by_aug["pixmix_moire"])
    return summary


def write_report(report: dict, path) -> None:
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True))
