"""featx command line: annotations in, QFV1 features out.

    featx annotations.csv --images-dir frames/ --binary-stop-sign \
          --out features.qfv

Exactly one class coding must be chosen: --binary-stop-sign (the stop
class codes to 1, everything else to 0) or --classes with a map file of
`name = index` lines.

Exit codes: 0 success, 2 bad arguments, 3 data problems (missing or
malformed annotations, missing images, unmapped classes, unavailable
weights). The report goes to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import sys

from featx.extract import WEIGHT_MODES, WeightsError, extract
from featx.records import AnnotationError, binary_stop_sign, read_class_map

EXIT_USAGE = 2
EXIT_DATA = 3


def _non_negative_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be non-negative: {text!r}")
    return value


def _non_negative_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative: {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="featx",
        description="Crop annotated sign regions and write frozen-network "
        "features as a QFV1 file.",
    )
    parser.add_argument(
        "annotations", help="CSV file with columns image,x,y,w,h,class"
    )
    parser.add_argument(
        "--images-dir",
        default=".",
        help="directory image paths are relative to (default: .)",
    )
    parser.add_argument(
        "--out",
        default="features.qfv",
        help="output feature file (default: features.qfv)",
    )
    parser.add_argument(
        "--margin",
        type=_non_negative_float,
        default=0.1,
        help="fraction of the box size added around it before cropping "
        "(default: 0.1)",
    )
    coding = parser.add_mutually_exclusive_group(required=True)
    coding.add_argument(
        "--binary-stop-sign",
        action="store_true",
        help="code the stop class as 1 and every other class as 0",
    )
    coding.add_argument(
        "--classes",
        metavar="MAP",
        help="class map file of 'name = index' lines",
    )
    parser.add_argument(
        "--weights",
        choices=WEIGHT_MODES,
        default="seeded",
        help="pretrained: the pinned checkpoint from weights.lock; "
        "seeded: deterministic seeded initialization (default)",
    )
    parser.add_argument(
        "--seed",
        type=_non_negative_int,
        default=0,
        help="seed for --weights seeded (default: 0)",
    )
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.binary_stop_sign:
            class_map = binary_stop_sign
        else:
            class_map = read_class_map(args.classes)
        features, labels = extract(
            args.annotations,
            args.images_dir,
            class_map,
            args.out,
            margin=args.margin,
            weights=args.weights,
            seed=args.seed,
        )
    except (AnnotationError, WeightsError, OSError, ValueError) as exc:
        print(f"featx: {exc}", file=sys.stderr)
        return EXIT_DATA
    n_classes = int(labels.max()) + 1
    print(
        f"wrote {args.out}: {features.shape[0]} samples, "
        f"{features.shape[1]} features, {n_classes} classes"
    )
    return 0


def main_entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    main_entry()
