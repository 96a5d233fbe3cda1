"""Command line for regenerating figures from run artifacts."""

from __future__ import annotations

import argparse
import sys

from .figures import FigureRequest, make_figure


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="solitrain-plots")
    parser.add_argument("kind", choices=("decay", "snapshot", "regions"))
    parser.add_argument("input", help="CSV (decay), NLSF (snapshot) or regions JSON")
    parser.add_argument("--out", required=True, help="output figure path (.svg/.png)")
    args = parser.parse_args(argv)
    try:
        result = make_figure(FigureRequest(kind=args.kind, inputs=[args.input], output=args.out))
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for key, val in sorted(result.items()):
        print(f"{key}: {val}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
