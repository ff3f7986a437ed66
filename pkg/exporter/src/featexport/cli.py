"""Command line entry point: ``featexport export ...``."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from featexport.export import export_features, export_reference_vectors
from featexport.models import MODELS, WEIGHT_CHOICES


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="featexport",
        description="Export per-patch CNN features to PFV1 stores.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    exp = sub.add_parser("export", help="export one manifest split")
    exp.add_argument("--manifest", required=True, help="dataset manifest (YAML)")
    exp.add_argument("--split", required=True, choices=("train", "test"))
    exp.add_argument("--model", required=True, choices=sorted(MODELS))
    exp.add_argument("--out", required=True, help="output store path")
    exp.add_argument("--weights", default="imagenet", choices=WEIGHT_CHOICES)
    exp.add_argument("--seed", type=int, default=0)
    exp.add_argument(
        "--frames-root",
        default=None,
        help="base directory for relative frame_dir entries "
        "(default: the manifest's directory)",
    )

    ref = sub.add_parser(
        "reference", help="write the golden reference store from fixture patches"
    )
    ref.add_argument("--model", required=True, choices=sorted(MODELS))
    ref.add_argument("--patches", required=True, help=".npz file with a 'patches' array")
    ref.add_argument("--out", required=True)
    ref.add_argument("--weights", default="none", choices=WEIGHT_CHOICES)
    ref.add_argument("--seed", type=int, default=0)

    args = parser.parse_args(argv)
    try:
        if args.command == "export":
            n = export_features(
                args.manifest,
                args.split,
                args.model,
                args.out,
                weights=args.weights,
                seed=args.seed,
                frames_root=args.frames_root,
                verbose=True,
            )
            print(f"wrote {n} frames to {args.out}")
        else:
            with np.load(args.patches) as data:
                patches = data["patches"]
            rows = export_reference_vectors(
                args.model,
                patches,
                args.out,
                weights=args.weights,
                seed=args.seed,
            )
            print(f"wrote {rows.shape[0]} reference rows to {args.out}")
    except (OSError, ValueError, RuntimeError, ImportError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
