"""Figure rendering from ipinn run outputs.

Consumes only the trainer's CSV interfaces:

* field.csv    — x, y|t, u_exact, u_pred, abs_err (cavity adds v and
                 velocity-magnitude columns)
* history.csv  — iter, total, L_ic, L_bc, L_r, lam_ic, lam_bc, lam_r
* summary.csv  — matrix medians per (model, layers, units[, gamma])

Rendering is deterministic: the same inputs give the same figure layout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import matplotlib
matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

PANEL_KINDS = ("panels", "lam_history", "loss_history", "matrix_bars")


class InputError(ValueError):
    """Input file does not match the expected schema."""


@dataclass
class FigureJob:
    kind: str
    source: str
    out: str
    title: str = ""
    dpi: int = 130

    def __post_init__(self):
        if self.kind not in PANEL_KINDS:
            raise InputError(f"unknown figure kind {self.kind!r}; "
                             f"choose from {PANEL_KINDS}")


def render(job: FigureJob):
    """Write the figure for the job; returns the matplotlib Figure."""
    fig = _RENDERERS[job.kind](job)
    fig.savefig(job.out, dpi=job.dpi)
    return fig


def _load_field(path):
    df = pd.read_csv(path)
    if df.columns[0] != "x" or df.columns[1] not in ("y", "t"):
        raise InputError(f"{path}: expected x and y|t leading columns, "
                         f"got {list(df.columns)[:2]}")
    for col in ("abs_err",):
        if col not in df.columns:
            raise InputError(f"{path}: missing column {col}")
    return df


def _gridded(df, col):
    xs = np.unique(df.iloc[:, 0].to_numpy())
    ys = np.unique(df.iloc[:, 1].to_numpy())
    if xs.size * ys.size != len(df):
        raise InputError("field file is not a full tensor grid")
    order = np.lexsort((df.iloc[:, 1].to_numpy(), df.iloc[:, 0].to_numpy()))
    return xs, ys, df[col].to_numpy()[order].reshape(xs.size, ys.size)


def _render_panels(job: FigureJob):
    df = _load_field(job.source)
    if "vel_mag_exact" in df.columns:
        exact_col, pred_col = "vel_mag_exact", "vel_mag_pred"
        quantity = "velocity magnitude"
    else:
        exact_col, pred_col = "u_exact", "u_pred"
        quantity = "u"
    xs, ys, exact = _gridded(df, exact_col)
    _, _, pred = _gridded(df, pred_col)
    _, _, err = _gridded(df, "abs_err")
    fig, axes = plt.subplots(1, 3, figsize=(12.5, 3.6), constrained_layout=True)
    lo = min(exact.min(), pred.min())
    hi = max(exact.max(), pred.max())
    extent = (xs[0], xs[-1], ys[0], ys[-1])
    for ax, data, name, (vmin, vmax), cmap in (
            (axes[0], exact, f"exact {quantity}", (lo, hi), "jet"),
            (axes[1], pred, f"predicted {quantity}", (lo, hi), "jet"),
            (axes[2], err, "absolute error", (err.min(), err.max()), "viridis")):
        im = ax.imshow(data.T, origin="lower", extent=extent, aspect="auto",
                       vmin=vmin, vmax=vmax, cmap=cmap)
        ax.set_title(name)
        ax.set_xlabel(df.columns[0])
        ax.set_ylabel(df.columns[1])
        fig.colorbar(im, ax=ax)
    if job.title:
        fig.suptitle(job.title)
    return fig


def _load_history(path):
    df = pd.read_csv(path)
    if "iter" not in df.columns or "total" not in df.columns:
        raise InputError(f"{path}: not a history file (need iter,total,...)")
    return df


def _render_lam_history(job: FigureJob):
    df = _load_history(job.source)
    fig, ax = plt.subplots(figsize=(6.5, 4.2), constrained_layout=True)
    labels = {"lam_ic": r"$\lambda_{ic}$", "lam_bc": r"$\lambda_{bc}$",
              "lam_r": r"$\lambda_r$"}
    plotted = 0
    for col, label in labels.items():
        if col in df.columns and df[col].notna().any():
            ax.plot(df["iter"], df[col], label=label)
            plotted += 1
    if not plotted:
        raise InputError(f"{job.source}: no finite lambda columns")
    ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel("loss weight")
    ax.legend()
    ax.set_title(job.title or "adaptive weight history")
    return fig


def _render_loss_history(job: FigureJob):
    df = _load_history(job.source)
    fig, ax = plt.subplots(figsize=(6.5, 4.2), constrained_layout=True)
    for col, label in (("total", "total"), ("L_ic", "initial"),
                       ("L_bc", "boundary"), ("L_r", "residual")):
        if col in df.columns and df[col].notna().any():
            vals = df[col].to_numpy()
            if np.all(vals[np.isfinite(vals)] > 0) or col != "total":
                ax.plot(df["iter"], np.abs(vals), label=label)
    ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel("loss")
    ax.legend()
    ax.set_title(job.title or "loss history")
    return fig


def _render_matrix_bars(job: FigureJob):
    df = pd.read_csv(job.source)
    needed = {"model", "layers", "units", "median_rel_l2"}
    if not needed.issubset(df.columns):
        raise InputError(f"{job.source}: summary file needs {sorted(needed)}")
    df["structure"] = df["layers"].astype(str) + "x" + df["units"].astype(str)
    structures = list(dict.fromkeys(df["structure"]))
    models = list(dict.fromkeys(df["model"]))
    width = 0.8 / len(models)
    fig, ax = plt.subplots(figsize=(1.8 + 1.2 * len(structures), 4.4),
                           constrained_layout=True)
    xs = np.arange(len(structures))
    for k, model in enumerate(models):
        sub = df[df["model"] == model].set_index("structure")
        vals = [sub["median_rel_l2"].get(s, np.nan) for s in structures]
        ax.bar(xs + (k - (len(models) - 1) / 2) * width, vals, width,
               label=model)
    ax.set_yscale("log")
    ax.set_xticks(xs)
    ax.set_xticklabels(structures)
    ax.set_xlabel("hidden layers x units")
    ax.set_ylabel("median relative L2 error")
    ax.legend()
    ax.set_title(job.title or "model comparison")
    return fig


_RENDERERS = {
    "panels": _render_panels,
    "lam_history": _render_lam_history,
    "loss_history": _render_loss_history,
    "matrix_bars": _render_matrix_bars,
}
