"""CLI: ``mtscomb-plot scaling <csv> <png>`` and ``mtscomb-plot trace <csv> <png>``."""

from __future__ import annotations

import argparse
import sys

from .render import plot_scaling, plot_trace
from .summary import SchemaError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mtscomb-plot", description="render mtscomb experiment CSV output"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_s = sub.add_parser("scaling", help="log-log regret scaling with slope fit")
    p_s.add_argument("csv", help="summary CSV from a sweep")
    p_s.add_argument("png", help="output image path")

    p_t = sub.add_parser("trace", help="cumulative cost trace vs benchmarks")
    p_t.add_argument("csv", help="per-step trace CSV from a run")
    p_t.add_argument("png", help="output image path")
    p_t.add_argument("--trials", default=None,
                     help="companion trials CSV (default: sibling _trials.csv)")

    args = parser.parse_args(argv)
    try:
        if args.command == "scaling":
            slope = plot_scaling(args.csv, args.png)
            print(f"wrote {args.png} (fitted slope {slope:.3f})")
        else:
            labels = plot_trace(args.csv, args.png, args.trials)
            print(f"wrote {args.png} ({', '.join(labels)})")
    except SchemaError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
