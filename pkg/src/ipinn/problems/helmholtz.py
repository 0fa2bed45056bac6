"""2-D Helmholtz benchmark on [-1, 1]^2.

Manufactured solution u = sin(a1 pi x) sin(a2 pi y), residual operator
u_xx + u_yy + k^2 u - q. The forcing q is derived by applying the residual
operator to the exact solution, which keeps the pair consistent for every
k (for k = 1 this matches the additive k u form as well, since k^2 = k).
"""

from __future__ import annotations

import numpy as np

from ..autodiff import jets
from .base import EdgeClause, ProblemSpec, stacked_output


class Helmholtz(ProblemSpec):
    name = "helmholtz"
    terms = ("bc", "r")
    gamma_default = 100.0
    counts_default = {"n_bc": 512, "n_r": 128}
    bounds = np.array([[-1.0, 1.0], [-1.0, 1.0]])

    def __init__(self, a1=1.0, a2=4.0, k=1.0):
        self.a1 = float(a1)
        self.a2 = float(a2)
        self.k = float(k)

    def edges(self):
        return [
            EdgeClause("left", 0, -1.0, -1.0, 1.0),
            EdgeClause("right", 0, 1.0, -1.0, 1.0),
            EdgeClause("bottom", 1, -1.0, -1.0, 1.0),
            EdgeClause("top", 1, 1.0, -1.0, 1.0),
        ]

    def exact(self, pts):
        u = np.sin(self.a1 * np.pi * pts[:, 0]) * np.sin(self.a2 * np.pi * pts[:, 1])
        return u[:, None]

    def exact_fields(self, pts):
        """Analytic value and second derivatives (for oracles and forcing)."""
        sx = np.sin(self.a1 * np.pi * pts[:, 0])
        sy = np.sin(self.a2 * np.pi * pts[:, 1])
        u = sx * sy
        return {"u": u,
                "u_xx": -(self.a1 * np.pi) ** 2 * u,
                "u_yy": -(self.a2 * np.pi) ** 2 * u}

    def residual_lhs(self, fields):
        return fields["u_xx"] + fields["u_yy"] + self.k ** 2 * fields["u"]

    def forcing(self, pts):
        return self.residual_lhs(self.exact_fields(pts))[:, None]

    def boundary_targets(self, clause, pts):
        return self.exact(pts)

    def _table(self, batch):
        return jets.residual_table(batch.n_bc + batch.n_r, batch.n_r, 2,
                                   [(0, 0, 1.0), (1, 1, 1.0)])

    def build_losses(self, g, net, blocks, batch):
        n_bc, n_r = batch.n_bc, batch.n_r
        table = self._table(batch)
        out = stacked_output(g, net, blocks, table, "points_stack")
        u_bc = out.val_rows(0, n_bc)
        u_res = out.val_rows(n_bc, n_bc + n_r)
        lap = out.chan(3)
        r = lap + u_res * self.k ** 2 - g.input("forcing", (n_r, 1))
        tgt = g.input("bc_targets", (n_bc, 1))
        losses = {"bc": g.mean(g.square(u_bc - tgt)), "r": g.mean(g.square(r))}
        self.bind_batch(g, batch)
        return losses

    def bind_batch(self, g, batch):
        pts = np.vstack([batch.boundary, batch.interior])
        g.set_input("points_stack", jets.stack_buffer(self._table(batch), pts))
        g.set_input("bc_targets", self.boundary_target_matrix(batch))
        g.set_input("forcing", self.forcing(batch.interior))


def helmholtz_exact(x, y, a1=1.0, a2=4.0):
    return np.sin(a1 * np.pi * np.asarray(x)) * np.sin(a2 * np.pi * np.asarray(y))


def helmholtz_forcing(x, y, a1=1.0, a2=4.0, k=1.0):
    pts = np.column_stack([np.atleast_1d(np.asarray(x, dtype=float)),
                           np.atleast_1d(np.asarray(y, dtype=float))])
    q = Helmholtz(a1, a2, k).forcing(pts)[:, 0]
    return q if q.size > 1 else float(q[0])
