"""Command line: render figures from experiment output files."""

import argparse
import sys

from .figures import FIGURE_KINDS, FigureRequest, render
from .reader import SchemaError


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="smoothot-plots", description="render smoothot experiment figures"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    rend = sub.add_parser("render", help="render one figure")
    rend.add_argument("--kind", choices=FIGURE_KINDS, required=True)
    rend.add_argument(
        "--in", dest="inputs", nargs="+", required=True, help="input CSV file(s)"
    )
    rend.add_argument("--out", required=True, help="output image (.png or .svg)")
    rend.add_argument("--title", default="")
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv if argv is not None else sys.argv[1:])
    try:
        request = FigureRequest(
            kind=args.kind, inputs=tuple(args.inputs), output=args.out,
            title=args.title,
        )
        render(request)
    except (SchemaError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
