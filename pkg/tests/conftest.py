import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from moiredb import ParamRanges, build_mixing_set

sys.path.insert(0, str(Path(__file__).parent))  # make oracle importable


def run_cli(*args, cwd=None):
    """Run the CLI exactly as a user would, in a subprocess."""
    return subprocess.run(
        [sys.executable, "-m", "moiredb", *map(str, args)],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


def make_cifar_file(path, n, class_count=10, seed=0):
    """Synthetic CIFAR binary batch: n records of random pixels, labels i % classes."""
    rng = np.random.default_rng(seed)
    record_head = 1 if class_count == 10 else 2
    chunks = []
    for i in range(n):
        head = bytes([i % class_count]) if class_count == 10 else bytes(
            [i % 20, i % class_count]
        )
        assert len(head) == record_head
        chunks.append(head + rng.integers(0, 256, 3072, dtype=np.uint8).tobytes())
    Path(path).write_bytes(b"".join(chunks))
    return path


@pytest.fixture(scope="session")
def small_mixing_set(tmp_path_factory):
    """A tiny 64x64 mixing set shared by read-only tests."""
    out = tmp_path_factory.mktemp("mixset")
    manifest = build_mixing_set(
        master_seed=7, count=4, ranges=ParamRanges(), width=64, height=64, out_dir=out
    )
    return out, manifest
