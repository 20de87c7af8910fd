"""Command line: generate mixing sets, mix CIFAR batches, preview, verify.

Exit codes: 0 success, 1 runtime failure (I/O, bad data), 2 usage error.
Every subcommand is deterministic given its flags.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .dataset import (
    DatasetError,
    DatasetManifest,
    MANIFEST_NAME,
    augment_records,
    build_mixing_set,
    content_hash,
    dataset_hash,
    image_filename,
    load_gray_png,
    load_mixing_set,
    read_cifar_batch,
    save_gray_png,
    write_augmented_dataset,
)
from .mixing import MixConfig
from .moire import (
    DEFAULT_AMPLITUDE,
    DEFAULT_CENTER_MAX,
    DEFAULT_CENTER_MIN,
    DEFAULT_IMAGE_SIZE,
    DEFAULT_NU_MAX,
    DEFAULT_NU_MIN,
    DEFAULT_QN_CHOICES,
    ConcentricPatternSpec,
    MoireImageSpec,
    ParamRanges,
    generate_moire,
    sample_spec,
)
from .rng import Xoshiro256pp

DEFAULT_MIXING_SET_COUNT = 14230  # matches the published mixing-set size


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _seed_u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _qn_choices(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in text.split(",") if part)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}")
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError(f"pattern counts must be >= 1, got {text!r}")
    return values


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(",") if part)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}")


def _probability(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"probability must be in [0, 1], got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="moiredb",
        description=(
            "Generate interference-fringe mixing sets and apply "
            "PixMix-style augmentation to CIFAR batches."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser(
        "generate",
        help="generate a mixing set (defaults: 14230 images at 512x512)",
    )
    gen.add_argument("--out", required=True, help="output directory")
    gen.add_argument("--seed", type=_seed_u64, default=0, help="master seed (default 0)")
    gen.add_argument(
        "--count",
        type=_positive_int,
        default=DEFAULT_MIXING_SET_COUNT,
        help=f"number of images (default {DEFAULT_MIXING_SET_COUNT})",
    )
    gen.add_argument(
        "--size",
        type=_positive_int,
        default=DEFAULT_IMAGE_SIZE,
        help=f"square image size in pixels (default {DEFAULT_IMAGE_SIZE})",
    )
    gen.add_argument("--threads", type=_positive_int, default=1, help="worker processes")
    gen.add_argument("--nu-min", type=float, default=DEFAULT_NU_MIN,
                     help=f"interval-frequency lower bound (default {DEFAULT_NU_MIN})")
    gen.add_argument("--nu-max", type=float, default=DEFAULT_NU_MAX,
                     help=f"interval-frequency upper bound, exclusive (default {DEFAULT_NU_MAX})")
    gen.add_argument("--center-min", type=float, default=DEFAULT_CENTER_MIN,
                     help=f"center-coordinate lower bound (default {DEFAULT_CENTER_MIN:g})")
    gen.add_argument("--center-max", type=float, default=DEFAULT_CENTER_MAX,
                     help=f"center-coordinate upper bound, exclusive (default {DEFAULT_CENTER_MAX:g})")
    gen.add_argument("--qn", type=_qn_choices, default=DEFAULT_QN_CHOICES,
                     help="comma-separated pattern-count choices (default 1,2,3)")
    gen.add_argument("--amplitude", type=float, default=DEFAULT_AMPLITUDE,
                     help=f"sinusoid amplitude in (0, 1] (default {DEFAULT_AMPLITUDE})")
    gen.set_defaults(func=cmd_generate)

    mix = sub.add_parser("mix", help="augment a CIFAR binary batch once per record")
    mix.add_argument("--cifar", required=True, help="CIFAR binary batch file")
    mix.add_argument("--classes", type=int, choices=(10, 100), required=True)
    mix.add_argument("--mixing-set", required=True, help="mixing-set directory")
    mix.add_argument("--out", required=True, help="output directory")
    mix.add_argument("--seed", type=_seed_u64, default=0, help="augmentation seed")
    mix.add_argument("--k-max", type=int, default=5, help="max mixing steps (default 5)")
    mix.add_argument("--beta", type=float, default=3.0,
                     help="coefficient-distribution shape (default 3)")
    mix.add_argument("--p-moire", type=_probability, default=0.5,
                     help="probability a partner comes from the mixing set (default 0.5)")
    mix.add_argument("--p-additive", type=_probability, default=0.5,
                     help="probability a step is additive (default 0.5)")
    mix.add_argument("--mult-floor", type=float, default=1e-3,
                     help="floor of the multiplicative working space (default 1e-3)")
    mix.add_argument("--no-verify", action="store_true",
                     help="skip content-hash verification of the mixing set")
    mix.set_defaults(func=cmd_mix)

    prev = sub.add_parser("preview", help="render a single fringe image for inspection")
    prev.add_argument("--out", required=True, help="output PNG path")
    prev.add_argument("--size", type=_positive_int, default=DEFAULT_IMAGE_SIZE)
    prev.add_argument("--seed", type=_seed_u64, default=0,
                      help="seed (samples any parameters not given explicitly)")
    prev.add_argument("--qn", type=_positive_int, default=None,
                      help="number of superposed patterns")
    prev.add_argument("--nu", type=_float_list, default=None,
                      help="comma-separated interval frequencies, one per pattern")
    prev.add_argument("--cx", type=_float_list, default=None,
                      help="comma-separated center x coordinates")
    prev.add_argument("--cy", type=_float_list, default=None,
                      help="comma-separated center y coordinates")
    prev.add_argument("--amplitude", type=float, default=DEFAULT_AMPLITUDE)
    prev.set_defaults(func=cmd_preview)

    ver = sub.add_parser(
        "verify",
        help="re-derive every image of a mixing set from its manifest and compare hashes",
    )
    ver.add_argument("--dir", required=True, help="mixing-set directory")
    ver.set_defaults(func=cmd_verify)

    return parser


def cmd_generate(args) -> int:
    try:
        ranges = ParamRanges(
            nu_min=args.nu_min,
            nu_max=args.nu_max,
            center_min=args.center_min,
            center_max=args.center_max,
            q_n_choices=args.qn,
            amplitude=args.amplitude,
        )
    except ValueError as e:
        print(f"moiredb generate: {e}", file=sys.stderr)
        return 2
    start = time.perf_counter()
    try:
        manifest = build_mixing_set(
            master_seed=args.seed,
            count=args.count,
            ranges=ranges,
            width=args.size,
            height=args.size,
            out_dir=args.out,
            threads=args.threads,
        )
    except OSError as e:
        print(f"moiredb generate: {e}", file=sys.stderr)
        return 1
    elapsed = time.perf_counter() - start
    print(f"generated: {manifest.count} images ({args.size}x{args.size}) in {elapsed:.1f}s")
    print(f"manifest: {Path(args.out) / MANIFEST_NAME}")
    print(f"dataset-hash: {dataset_hash(manifest):016x}")
    return 0


def cmd_mix(args) -> int:
    if args.k_max < 0:
        print(f"moiredb mix: --k-max must be >= 0, got {args.k_max}", file=sys.stderr)
        return 2
    try:
        config = MixConfig(
            k_max=args.k_max,
            beta_shape=args.beta,
            p_mixer_from_set=args.p_moire,
            p_additive=args.p_additive,
            mult_floor=args.mult_floor,
        )
    except ValueError as e:
        print(f"moiredb mix: {e}", file=sys.stderr)
        return 2
    try:
        records = read_cifar_batch(args.cifar, args.classes)
        mixing_set = load_mixing_set(args.mixing_set, verify=not args.no_verify)
        augmented = augment_records(records, mixing_set, args.seed, config)
        summary = write_augmented_dataset(augmented, args.out, args.seed, config)
    except (DatasetError, FileNotFoundError, OSError) as e:
        print(f"moiredb mix: {e}", file=sys.stderr)
        return 1
    print(f"augmented: {summary['count']} records -> {summary['out_dir']}")
    return 0


def cmd_preview(args) -> int:
    explicit = [flag for flag in (args.nu, args.cx, args.cy) if flag is not None]
    try:
        if explicit:
            if len(explicit) != 3:
                raise ValueError("--nu, --cx and --cy must be given together")
            q_n = args.qn if args.qn is not None else len(args.nu)
            if not (len(args.nu) == len(args.cx) == len(args.cy) == q_n):
                raise ValueError(
                    f"need {q_n} values in each of --nu/--cx/--cy, got "
                    f"{len(args.nu)}/{len(args.cx)}/{len(args.cy)}"
                )
            patterns = tuple(
                ConcentricPatternSpec(nu, cx, cy, args.amplitude)
                for nu, cx, cy in zip(args.nu, args.cx, args.cy)
            )
            spec = MoireImageSpec(q_n, patterns, args.size, args.size, args.seed)
        else:
            choices = (args.qn,) if args.qn is not None else DEFAULT_QN_CHOICES
            ranges = ParamRanges(q_n_choices=choices, amplitude=args.amplitude)
            rng = Xoshiro256pp(args.seed)
            spec = sample_spec(rng, ranges, args.size, args.size, args.seed)
    except ValueError as e:
        print(f"moiredb preview: {e}", file=sys.stderr)
        return 2
    try:
        save_gray_png(generate_moire(spec), args.out)
    except OSError as e:
        print(f"moiredb preview: {e}", file=sys.stderr)
        return 1
    print(f"preview: {args.out}")
    return 0


def cmd_verify(args) -> int:
    directory = Path(args.dir)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.is_file():
        print(f"moiredb verify: missing manifest: {manifest_path}", file=sys.stderr)
        return 1
    try:
        manifest = DatasetManifest.from_json(manifest_path.read_text(encoding="utf-8"))
    except DatasetError as e:
        print(f"moiredb verify: {e}", file=sys.stderr)
        return 1
    bad = 0
    for entry in manifest.entries:
        path = directory / image_filename(entry.index)
        try:
            stored = content_hash(load_gray_png(path))
        except (DatasetError, FileNotFoundError) as e:
            print(f"moiredb verify: entry {entry.index}: {e}", file=sys.stderr)
            bad += 1
            continue
        rederived = content_hash(generate_moire(entry.spec))
        if stored != entry.content_hash:
            print(
                f"moiredb verify: entry {entry.index}: stored image does not "
                f"match manifest hash",
                file=sys.stderr,
            )
            bad += 1
        elif rederived != entry.content_hash:
            print(
                f"moiredb verify: entry {entry.index}: re-derived image does "
                f"not match manifest hash",
                file=sys.stderr,
            )
            bad += 1
    if bad:
        print(f"moiredb verify: {bad} of {manifest.count} entries failed", file=sys.stderr)
        return 1
    print(f"verified: {manifest.count} entries, dataset-hash {dataset_hash(manifest):016x}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
