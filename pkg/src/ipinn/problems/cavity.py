"""Lid-driven cavity at Re = 100 on the unit square.

One network with three outputs (u, v, p). Steady incompressible
Navier-Stokes residuals:

    r_momx = u u_x + v u_y + p_x - (u_xx + u_yy) / Re
    r_momy = u v_x + v v_y + p_y - (v_xx + v_yy) / Re
    r_cont = u_x + v_y

Velocity boundary targets: (1, 0) on the moving lid, (0, 0) on the fixed
walls; lid sampling keeps a 1e-6 offset from the two top corners where
the velocity jumps. The pressure is gauged by penalising p at the domain
centre, since the equations fix it only up to a constant.
"""

from __future__ import annotations

import numpy as np

from ..autodiff import jets
from .base import EdgeClause, ProblemSpec, stacked_output

CORNER_OFFSET = 1e-6
GAUGE_POINT = (0.5, 0.5)


class Cavity(ProblemSpec):
    name = "cavity"
    output_dim = 3
    terms = ("bc", "r")
    gamma_default = 100.0
    # 128 interior points per step under-resolve the Re=100 momentum
    # residuals (errors plateau ~1.7e-1 however the optimizer is driven);
    # 512 restores the reported error regime
    counts_default = {"n_bc": 512, "n_r": 512}
    lr_decay_default = 0.95
    bounds = np.array([[0.0, 1.0], [0.0, 1.0]])

    def __init__(self, re=100.0):
        self.re = float(re)

    def edges(self):
        eps = CORNER_OFFSET
        return [
            EdgeClause("floor", 1, 0.0, 0.0, 1.0),
            EdgeClause("left", 0, 0.0, 0.0, 1.0 - eps),
            EdgeClause("right", 0, 1.0, 0.0, 1.0 - eps),
            EdgeClause("lid", 1, 1.0, eps, 1.0 - eps),
        ]

    def boundary_targets(self, clause, pts):
        t = np.zeros((pts.shape[0], 2))
        if clause == "lid":
            t[:, 0] = 1.0
        return t

    def residual_lhs(self, fields):
        """Stacked (n, 3) residuals from plain arrays of the field jets."""
        re = self.re
        rx = (fields["u"] * fields["u_x"] + fields["v"] * fields["u_y"]
              + fields["p_x"] - (fields["u_xx"] + fields["u_yy"]) / re)
        ry = (fields["u"] * fields["v_x"] + fields["v"] * fields["v_y"]
              + fields["p_y"] - (fields["v_xx"] + fields["v_yy"]) / re)
        rc = fields["u_x"] + fields["v_y"]
        return np.column_stack([rx, ry, rc])

    def _table(self, batch):
        return jets.residual_table(batch.n_bc + 1 + batch.n_r, batch.n_r, 2,
                                   [(0, 0, 1.0), (1, 1, 1.0)])

    def build_losses(self, g, net, blocks, batch):
        n_bc, n_r = batch.n_bc, batch.n_r
        n_val = n_bc + 1 + n_r
        out = stacked_output(g, net, blocks, self._table(batch), "points_stack")

        bc_vals = out.val_rows(0, n_bc)
        u_bc = g.col(bc_vals, 0)
        v_bc = g.col(bc_vals, 1)
        p_gauge = g.col(out.val_rows(n_bc, n_bc + 1), 2)
        res_vals = out.val_rows(n_bc + 1, n_val)
        u, v = g.col(res_vals, 0), g.col(res_vals, 1)
        dx, dy, lap = out.chan(1), out.chan(2), out.chan(3)
        u_x, v_x, p_x = g.col(dx, 0), g.col(dx, 1), g.col(dx, 2)
        u_y, v_y, p_y = g.col(dy, 0), g.col(dy, 1), g.col(dy, 2)
        lap_u, lap_v = g.col(lap, 0), g.col(lap, 1)

        inv_re = 1.0 / self.re
        r_momx = u * u_x + v * u_y + p_x - lap_u * inv_re
        r_momy = u * v_x + v * v_y + p_y - lap_v * inv_re
        r_cont = u_x + v_y
        loss_r = (g.mean(g.square(r_momx)) + g.mean(g.square(r_momy))
                  + g.mean(g.square(r_cont)))

        tgt = g.input("bc_targets", (n_bc, 2))
        loss_bc = (g.mean(g.square(u_bc - g.col(tgt, 0)))
                   + g.mean(g.square(v_bc - g.col(tgt, 1)))
                   + g.square(p_gauge))
        self.bind_batch(g, batch)
        return {"bc": loss_bc, "r": loss_r}

    def bind_batch(self, g, batch):
        pts = np.vstack([batch.boundary, np.array([GAUGE_POINT]), batch.interior])
        g.set_input("points_stack", jets.stack_buffer(self._table(batch), pts))
        g.set_input("bc_targets", self.boundary_target_matrix(batch))

    def eval_grid(self, n=100):
        """Interior-only grid: wall rows would pin the discontinuous lid."""
        axes = [np.linspace(lo, hi, n + 2)[1:-1] for lo, hi in self.bounds]
        xx, yy = np.meshgrid(axes[0], axes[1], indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel()])


def cavity_residual(fields, re=100.0):
    """Residual triple from precomputed field derivatives (plain arrays)."""
    return Cavity(re).residual_lhs(fields)
