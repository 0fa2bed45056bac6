"""Command line entry points.

    ipinn run --problem helmholtz --model ipinn --layers 7 --units 50 \
              --gamma 100 --adam-iters 40000 --seed 0 --out runs/h0
    ipinn matrix --config matrix.json --out runs/matrix
    ipinn refsolve --re 100 --n 129 --out cavity_ref.csv

`run --config FILE` reads RunConfig fields from JSON; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import sys

from .harness.config import RunConfig
from .harness.matrix import MatrixConfig, run_matrix
from .harness.train import train
from . import refcavity


def _run_parser(sub):
    p = sub.add_parser("run", help="train one configuration")
    p.add_argument("--config", help="JSON file with RunConfig fields")
    p.add_argument("--problem", choices=["helmholtz", "kg", "cavity"])
    p.add_argument("--model", help="pinn | ia | aw | iaw | ipinn")
    p.add_argument("--layers", type=int)
    p.add_argument("--units", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--adam-iters", type=int, dest="adam_iters")
    p.add_argument("--adam-lr", type=float, dest="adam_lr")
    p.add_argument("--lbfgs", action="store_true", default=None)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", dest="out_dir")
    p.add_argument("--resample-every", type=int, dest="resample_every")
    p.add_argument("--engine", choices=["auto", "compiled", "python"])
    return p


def cmd_run(args):
    base = {}
    if args.config:
        with open(args.config) as fh:
            base = json.load(fh)
    for key in ("problem", "model", "layers", "units", "gamma", "adam_iters",
                "adam_lr", "lbfgs", "seed", "out_dir", "resample_every", "engine"):
        val = getattr(args, key, None)
        if val is not None:
            base[key] = val
    config = RunConfig.from_dict(base)
    record = train(config)
    if record.aborted:
        print(f"run aborted: {record.abort_diagnostic}")
        return 1
    err = f"{record.rel_l2:.4e}" if record.rel_l2 is not None else "n/a"
    print(f"{config.problem} {config.model} L{config.layers}xU{config.units} "
          f"seed {config.seed}: rel_l2 = {err} "
          f"({record.termination}, {record.wall_time:.1f}s)")
    return 0


def cmd_matrix(args):
    mconfig = MatrixConfig.from_json(args.config)
    summary = run_matrix(mconfig, args.out)
    for row in summary:
        print(f"{row['model']:>9} L{row['layers']}xU{row['units']} "
              f"gamma={row['gamma'] or '-'}: median rel_l2 = "
              f"{row['median_rel_l2']} [{row['status']}]")
    return 0


def cmd_refsolve(args):
    ref = refcavity.solve_cavity_fd(re=args.re, n=args.n, tol=args.tol,
                                    omega=args.omega)
    refcavity.save_reference(ref, args.out)
    print(f"wrote {args.out}: n={ref.n}, Re={args.re}, "
          f"{ref.meta['iterations']} iterations, "
          f"residual {ref.meta['residual']:.2e}")
    return 0


def main(argv=None):
    ap = argparse.ArgumentParser(prog="ipinn")
    sub = ap.add_subparsers(dest="cmd", required=True)
    _run_parser(sub)

    pm = sub.add_parser("matrix", help="run an experiment matrix")
    pm.add_argument("--config", required=True)
    pm.add_argument("--out", required=True)

    pr = sub.add_parser("refsolve", help="finite-difference cavity reference")
    pr.add_argument("--re", type=float, default=100.0)
    pr.add_argument("--n", type=int, default=129)
    pr.add_argument("--tol", type=float, default=1e-7)
    pr.add_argument("--omega", type=float, default=1.5)
    pr.add_argument("--out", required=True)

    args = ap.parse_args(argv)
    if args.cmd == "run":
        return cmd_run(args)
    if args.cmd == "matrix":
        return cmd_matrix(args)
    return cmd_refsolve(args)


if __name__ == "__main__":
    sys.exit(main())
