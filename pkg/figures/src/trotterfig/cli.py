"""Command line entry point: trotterfig --panel <name> --manifest <path> --out <img>."""

from __future__ import annotations

import argparse
import sys

from .data import DataError
from .panels import PANELS
from .render import FigureSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trotterfig",
        description="Render a figure panel from completed run directories.",
    )
    parser.add_argument("--panel", required=True, choices=sorted(PANELS))
    parser.add_argument(
        "--manifest",
        action="append",
        required=True,
        metavar="PATH",
        help="run directory or manifest.json; repeat for panels that overlay runs",
    )
    parser.add_argument("--out", required=True, help="output image path (.png or .svg)")
    parser.add_argument("--dpi", type=int, default=150)
    log_group = parser.add_mutually_exclusive_group()
    log_group.add_argument("--logx", dest="logx", action="store_true", default=None)
    log_group.add_argument("--linx", dest="logx", action="store_false")
    logy_group = parser.add_mutually_exclusive_group()
    logy_group.add_argument("--logy", dest="logy", action="store_true", default=None)
    logy_group.add_argument("--liny", dest="logy", action="store_false")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(
            panel=args.panel,
            manifests=tuple(args.manifest),
            out=args.out,
            logx=args.logx,
            logy=args.logy,
            dpi=args.dpi,
        )
        path = render(spec)
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
