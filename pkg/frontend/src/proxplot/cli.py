"""Command-line entry point: render one figure from one or more trace CSVs."""

from __future__ import annotations

import argparse
import sys

from .plots import KINDS, PlotSpec, TraceSchemaError, fit_order, load_trace, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="proxplot",
        description="Render convergence figures from solver trace CSVs")
    parser.add_argument("--trace", action="append", required=True,
                        help="trace CSV path (repeatable for overlays)")
    parser.add_argument("--kind", required=True, choices=KINDS,
                        help="which figure to draw")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--s", type=float, default=None,
                        help="overlay the theoretical order line 1+s (order_fit)")
    parser.add_argument("--title", default="", help="figure title")
    parser.add_argument("--floor", type=float, default=1e-11,
                        help="residual accuracy floor for the order fit")
    args = parser.parse_args(argv)

    spec = PlotSpec(trace_paths=tuple(args.trace), kind=args.kind,
                    output_path=args.out, s_overlay=args.s, title=args.title,
                    floor=args.floor)
    try:
        out = render(spec)
    except (TraceSchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    if args.kind == "order_fit":
        for path in args.trace:
            fit = fit_order(load_trace(path).r, floor=args.floor)
            if fit is not None:
                print(f"{path}: fitted slope {fit['slope']:.9f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
