"""deap2psr command line: DEAP preprocessed archives -> PSR1 corpus."""

from __future__ import annotations

import argparse
import glob
import sys
from pathlib import Path

from .convert import (
    TRIM_MODES,
    ConversionError,
    convert_subject,
    merge_labels_csv,
    run_convert_check,
    write_manifest,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deap2psr",
        description="Convert DEAP preprocessed per-subject archives (sNN.dat) "
        "to PSR1 recordings and a labels CSV",
    )
    parser.add_argument("inputs", nargs="+",
                        help="archive files or globs, e.g. data/s*.dat")
    parser.add_argument("--out", required=True, help="output directory for .psr1 files")
    parser.add_argument("--labels-out", dest="labels_out",
                        help="labels CSV path (default <out>/labels.csv)")
    parser.add_argument("--trim-baseline", dest="trim_baseline",
                        choices=TRIM_MODES, default="auto",
                        help="drop the 3 s pre-trial baseline of 8064-sample archives")
    parser.add_argument("--manifest", help="write a JSON conversion manifest here")
    parser.add_argument("--validate", action="store_true",
                        help="run the pipeline's convert-check on the output")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    paths = []
    for pattern in args.inputs:
        matches = sorted(glob.glob(pattern))
        paths.extend(matches if matches else [pattern])
    missing = [p for p in paths if not Path(p).is_file()]
    if missing:
        print(f"error: input archives not found: {', '.join(missing)}", file=sys.stderr)
        return 3

    out = Path(args.out)
    labels_path = Path(args.labels_out) if args.labels_out else out / "labels.csv"
    manifests = []
    try:
        for path in paths:
            manifest = convert_subject(path, out, trim_baseline=args.trim_baseline)
            manifests.append(manifest)
            note = "trimmed 3s baseline" if manifest.trimmed_baseline else "no trim"
            print(f"converted subject {manifest.subject_id:02d}: "
                  f"{len(manifest.files)} trials ({note})")
        total = merge_labels_csv(labels_path, manifests)
    except ConversionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(f"labels CSV at {labels_path}: {total} rows")
    if args.manifest:
        write_manifest(manifests, args.manifest)
        print(f"manifest written to {args.manifest}")
    if args.validate:
        if not run_convert_check(out, labels_path):
            print("error: convert-check reported failures", file=sys.stderr)
            return 3
        print("convert-check passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
