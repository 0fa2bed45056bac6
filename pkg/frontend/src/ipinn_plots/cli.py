"""ipinn-plot: figures from run-output CSV files.

    ipinn-plot panels  --in runs/h0/field.csv   --out fig_panels.png
    ipinn-plot history --in runs/h0/history.csv --out fig_lam.png [--kind loss]
    ipinn-plot matrix  --in runs/mx/summary.csv --out fig_models.png
"""

from __future__ import annotations

import argparse
import sys

from .figures import FigureJob, InputError, render


def main(argv=None):
    ap = argparse.ArgumentParser(prog="ipinn-plot")
    sub = ap.add_subparsers(dest="cmd", required=True)
    for name in ("panels", "history", "matrix"):
        p = sub.add_parser(name)
        p.add_argument("--in", dest="source", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--title", default="")
        if name == "history":
            p.add_argument("--kind", choices=["lam", "loss"], default="lam")
    args = ap.parse_args(argv)
    kind = {"panels": "panels", "matrix": "matrix_bars"}.get(args.cmd)
    if kind is None:
        kind = "lam_history" if args.kind == "lam" else "loss_history"
    try:
        render(FigureJob(kind=kind, source=args.source, out=args.out,
                         title=args.title))
    except (InputError, OSError) as exc:
        print(f"ipinn-plot: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
