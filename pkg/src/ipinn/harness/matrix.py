"""Experiment-matrix runner: {models} x {layers} x {units} x {gammas} x seeds."""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .config import RunConfig, canonical_model
from .train import train

SUMMARY_COLUMNS = ["problem", "model", "layers", "units", "gamma", "seeds",
                   "median_rel_l2", "rel_l2_per_seed", "status"]


@dataclass
class MatrixConfig:
    problem: str = "helmholtz"
    models: list = field(default_factory=lambda: ["pinn", "ia-pinn", "iaw-pinn", "i-pinn"])
    layers: list = field(default_factory=lambda: [3, 5, 7])
    units: list = field(default_factory=lambda: [30, 50, 70, 90])
    seeds: list = field(default_factory=lambda: [0, 1, 2])
    gammas: list = field(default_factory=lambda: [None])
    adam_iters: int = 40000
    adam_lr: float = 1e-3
    lbfgs: bool = False
    overrides: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)
    workers: int = 1
    engine: str = "auto"
    eval_grid_n: int = 100

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls(**json.load(fh))


def _cell_dir(out_dir, model, layers, units, gamma):
    tag = f"{model}_L{layers}_U{units}"
    if gamma is not None:
        tag += f"_g{gamma:g}"
    return os.path.join(out_dir, tag)


def _run_cell_seed(args):
    cfg_dict, = args
    try:
        return train(RunConfig.from_dict(cfg_dict))
    except Exception as exc:  # pool path: failures come back as data
        return exc


def run_matrix(mconfig: MatrixConfig, out_dir):
    """One RunRecord per (cell, seed); aggregated medians in summary.csv.

    A failed cell is recorded with status=failed and does not stop the
    matrix. Returns the summary as a list of dicts.
    """
    os.makedirs(out_dir, exist_ok=True)
    cells = list(product([canonical_model(m) for m in mconfig.models],
                         mconfig.layers, mconfig.units, mconfig.gammas))
    jobs = []
    for model, layers, units, gamma in cells:
        for seed in mconfig.seeds:
            cdir = _cell_dir(out_dir, model, layers, units, gamma)
            cfg = RunConfig(
                problem=mconfig.problem, model=model, layers=layers, units=units,
                gamma=gamma, adam_iters=mconfig.adam_iters, adam_lr=mconfig.adam_lr,
                lbfgs=mconfig.lbfgs, seed=seed,
                out_dir=os.path.join(cdir, f"seed{seed}"),
                overrides=dict(mconfig.overrides), counts=dict(mconfig.counts),
                engine=mconfig.engine, eval_grid_n=mconfig.eval_grid_n)
            jobs.append(((model, layers, units, gamma), seed, cfg))

    results = {}
    if mconfig.workers > 1 and jobs:
        with ProcessPoolExecutor(max_workers=mconfig.workers) as pool:
            for (cell, seed, _), rec in zip(
                    jobs, pool.map(_run_cell_seed,
                                   [(c.to_dict(),) for _, _, c in jobs])):
                results[(cell, seed)] = rec
    else:
        for cell, seed, cfg in jobs:
            try:
                results[(cell, seed)] = train(cfg)
            except Exception as exc:  # cell failures are data, not fatal
                results[(cell, seed)] = exc

    summary = []
    for cell in cells:
        model, layers, units, gamma = cell
        errs, status = [], "ok"
        for seed in mconfig.seeds:
            rec = results[(cell, seed)]
            if isinstance(rec, Exception):
                status = "failed"
                errs.append(float("nan"))
            elif rec.aborted or rec.rel_l2 is None:
                status = "aborted"
                errs.append(float("nan"))
            else:
                errs.append(rec.rel_l2)
        finite = [e for e in errs if np.isfinite(e)]
        summary.append({
            "problem": mconfig.problem, "model": model, "layers": layers,
            "units": units, "gamma": "" if gamma is None else gamma,
            "seeds": len(mconfig.seeds),
            "median_rel_l2": float(np.median(finite)) if finite else float("nan"),
            "rel_l2_per_seed": ";".join(f"{e:.6g}" for e in errs),
            "status": status,
        })
    _write_summary(os.path.join(out_dir, "summary.csv"), summary)
    return summary


def _write_summary(path, summary):
    with open(path, "w") as fh:
        fh.write(",".join(SUMMARY_COLUMNS) + "\n")
        for row in summary:
            fh.write(",".join(str(row[c]) for c in SUMMARY_COLUMNS) + "\n")


def load_summary(path):
    rows = []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        for line in fh:
            rows.append(dict(zip(header, line.strip().split(","))))
    return rows
