"""Batch plot CLI: heavyspin-plot <kind> --in CSV [--json SIDECAR] --out PATH."""

from __future__ import annotations

import argparse
import sys

from .figures import FigureSpec, render
from .schema import KINDS, SchemaError


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="heavyspin-plot",
        description="Render heavyspin experiment outputs into figures")
    ap.add_argument("kind", choices=sorted(KINDS))
    ap.add_argument("--in", dest="csv_path", required=True,
                    help="input CSV (documented schema for the kind)")
    ap.add_argument("--json", dest="json_path", default=None,
                    help="results.json sidecar for prediction overlays")
    ap.add_argument("--out", required=True, help="output image (.svg or .png)")
    ap.add_argument("--alpha", type=float, default=None,
                    help="tail exponent fallback for frechet-qq without a sidecar")
    args = ap.parse_args(argv)
    style = {} if args.alpha is None else {"alpha": args.alpha}
    spec = FigureSpec(kind=args.kind, csv_path=args.csv_path,
                      out_path=args.out, json_path=args.json_path, style=style)
    try:
        render(spec)
    except (SchemaError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
