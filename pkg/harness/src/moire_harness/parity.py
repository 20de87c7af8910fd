"""Cross-implementation parity: run the primary CLI's `mix` on a fixture and
compare its output byte-for-byte against this package's mirror pipeline.

The comparison covers the full payload: every augmented image's raw pixel
bytes plus the labels file. Agreement over many seeds means the two
implementations of the published protocol have not drifted.
"""

from __future__ import annotations

import shutil
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .mirror import augment_cifar

PRIMARY_CLI = ("moiredb",)


@dataclass
class ParityResult:
    seeds_checked: int = 0
    mismatches: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.seeds_checked > 0 and not self.mismatches


def _run_primary_mix(cli, cifar, classes, mixing_set, out, seed, k_max, beta_shape):
    cmd = [
        *cli,
        "mix",
        "--cifar", str(cifar),
        "--classes", str(classes),
        "--mixing-set", str(mixing_set),
        "--out", str(out),
        "--seed", str(seed),
        "--k-max", str(k_max),
        "--beta", str(beta_shape),
        "--no-verify",
    ]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(f"primary mix failed (seed {seed}): {proc.stderr.strip()}")


def parity_check(
    cifar_path,
    classes: int,
    mixing_set_dir,
    work_dir,
    seeds,
    cli=PRIMARY_CLI,
    k_max: int = 5,
    beta_shape: float = 3.0,
    keep_outputs: bool = False,
) -> ParityResult:
    """Byte-compare primary CLI output with the mirror for every seed."""
    work = Path(work_dir)
    work.mkdir(parents=True, exist_ok=True)
    result = ParityResult()
    for seed in seeds:
        out = work / f"mix_seed_{seed}"
        _run_primary_mix(cli, cifar_path, classes, mixing_set_dir, out, seed, k_max, beta_shape)
        mirrored, labels = augment_cifar(
            cifar_path, classes, mixing_set_dir, seed, k_max=k_max, beta_shape=beta_shape
        )
        expected_labels = "\n".join(str(int(l)) for l in labels) + "\n"
        got_labels = (out / "labels.txt").read_text()
        if got_labels != expected_labels:
            result.mismatches.append((seed, "labels.txt differs"))
        for i in range(len(labels)):
            with Image.open(out / f"img_{i:06d}.png") as im:
                pixels = np.asarray(im, dtype=np.uint8)
            if pixels.tobytes() != mirrored[i].tobytes():
                result.mismatches.append((seed, f"record {i} pixels differ"))
                break
        result.seeds_checked += 1
        if not keep_outputs:
            shutil.rmtree(out, ignore_errors=True)
    return result
