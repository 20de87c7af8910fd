"""Harness command line: parity checks against the primary CLI and the
toy-scale robustness ablation."""

from __future__ import annotations

import argparse
import sys
import tempfile


def _seed_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.split(",") if p)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="moire-harness",
        description="Toy-scale robustness evaluation for fringe-mixing augmentation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    par = sub.add_parser("parity", help="byte-compare the primary mix CLI with the mirror")
    par.add_argument("--cifar", required=True, help="CIFAR binary batch fixture")
    par.add_argument("--classes", type=int, choices=(10, 100), default=10)
    par.add_argument("--mixing-set", required=True)
    par.add_argument("--seeds", type=int, default=100, help="number of seeds (default 100)")
    par.add_argument("--workdir", default=None, help="scratch directory (default: temp)")
    par.set_defaults(func=cmd_parity)

    run = sub.add_parser("run-all", help="train + evaluate the full ablation, emit JSON")
    run.add_argument("--cifar-dir", required=True, help="directory with CIFAR-10 .bin batches")
    run.add_argument("--cifar-c-dir", required=True, help="directory with CIFAR-10-C .npy files")
    run.add_argument("--mixing-set", required=True, help="mixing-set directory")
    run.add_argument("--out", required=True, help="output report JSON path")
    run.add_argument("--subset", type=int, default=10000)
    run.add_argument("--epochs", type=int, default=10)
    run.add_argument("--seeds", type=_seed_list, default=(0, 1, 2))
    run.add_argument("--fgsm-epsilon", type=float, default=2.0 / 255.0)
    run.add_argument("--device", default="auto")
    run.add_argument("--checkpoints", default=None,
                     help="directory for model checkpoints (default: not saved)")
    run.set_defaults(func=cmd_run_all)

    return parser


def cmd_parity(args) -> int:
    from .parity import parity_check

    workdir = args.workdir or tempfile.mkdtemp(prefix="moire_parity_")
    seeds = range(args.seeds)
    result = parity_check(args.cifar, args.classes, args.mixing_set, workdir, seeds)
    if result.ok:
        print(f"parity: OK ({result.seeds_checked} seeds byte-identical)")
        return 0
    for seed, detail in result.mismatches:
        print(f"parity: seed {seed}: {detail}", file=sys.stderr)
    print(f"parity: FAILED ({len(result.mismatches)} mismatches)", file=sys.stderr)
    return 1


def cmd_run_all(args) -> int:
    from .report import run_ablation, write_report
    from .train import EvalConfig

    config = EvalConfig(
        cifar_dir=args.cifar_dir,
        cifar_c_dir=args.cifar_c_dir,
        mixing_set_dir=args.mixing_set,
        subset_size=args.subset,
        epochs=args.epochs,
        seeds=args.seeds,
        fgsm_epsilon=args.fgsm_epsilon,
        device=args.device,
    )
    try:
        report = run_ablation(config, checkpoint_dir=args.checkpoints)
    except FileNotFoundError as e:
        print(f"moire-harness: {e}", file=sys.stderr)
        return 1
    write_report(report, args.out)
    summary = report["summary"]
    for aug, stats in summary.items():
        if isinstance(stats, dict) and "mean_mce" in stats:
            print(f"{aug}: mean mCE {stats['mean_mce']:.2f}")
    if "moire_wins_seeds" in summary:
        print(
            f"moire_pixmix lower mCE in {summary['moire_wins_seeds']} of "
            f"{summary['total_seeds']} seeds"
        )
    print(f"report: {args.out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
