"""Command-line entry point: render one figure from CSV input(s).

Usage:
    calmon-viz --kind heatmap --input power.csv --output power.png
    calmon-viz --kind trajectory --input monitor.csv --output e.png
    calmon-viz --kind pit-hist --input values.csv --bins 20 --output hist.png
    calmon-viz --kind density-compare --input pre.csv,in.csv --output cmp.png
"""

from __future__ import annotations

import argparse
import sys

from .plots import SchemaError, plot_density_compare, plot_heatmap, plot_pit_hist, plot_trajectory

KINDS = ("heatmap", "trajectory", "pit-hist", "density-compare")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="calmon-viz", description=__doc__)
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument(
        "--input", required=True,
        help="input CSV path; two comma-separated paths for density-compare",
    )
    parser.add_argument("--output", required=True, help="output image path")
    parser.add_argument("--bins", type=int, default=20, help="histogram bins (pit-hist)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.kind == "heatmap":
            plot_heatmap(args.input, output=args.output)
        elif args.kind == "trajectory":
            plot_trajectory(args.input, output=args.output)
        elif args.kind == "pit-hist":
            if args.bins < 1:
                parser.error("--bins must be >= 1")
            plot_pit_hist(args.input, bins=args.bins, output=args.output)
        else:
            paths = [p.strip() for p in args.input.split(",")]
            if len(paths) != 2:
                parser.error("density-compare needs --input pre.csv,in.csv")
            plot_density_compare(paths[0], paths[1], output=args.output)
    except (SchemaError, OSError) as err:
        print(f"calmon-viz: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
