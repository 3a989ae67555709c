"""Command line entry: flowfig <kind> --in <paths...> --out <png>."""

import argparse
import sys

from .formats import ArtifactError
from .render import KINDS, FigureSpec, render


def build_parser():
    parser = argparse.ArgumentParser(
        prog="flowfig",
        description="Render training-run artifacts to figures.",
    )
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"render a {kind} figure")
        p.add_argument("--in", dest="inputs", nargs="+", required=True,
                       help="input artifact file(s)")
        p.add_argument("--out", required=True, help="output image path")
        p.add_argument("--title", default="", help="figure title")
        p.add_argument("--label", dest="labels", action="append", default=[],
                       help="legend label, once per input (default: file stem)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(
            kind=args.kind,
            inputs=tuple(args.inputs),
            output=args.out,
            title=args.title,
            labels=tuple(args.labels),
        )
        render(spec)
    except ArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(args.out, flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
