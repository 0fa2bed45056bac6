"""Benchmark problem machinery: domains, clause sampling, loss graphs.

Point ordering convention inside a run: boundary points first, then
initial points (when the problem has them), then interior residual
points. Derivative channels of the stacked forward cover tails of this
ordering, so boundary rows only ever do value work.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import Graph, jets
from ..errors import ContractViolation
from ..network import NetOutput, NetworkDef, ParameterSet, register_blocks_for_net
from ..weighting import LossBreakdown


@dataclass(frozen=True)
class EdgeClause:
    """A boundary edge of an axis-aligned box: one coordinate pinned."""
    name: str
    fixed_dim: int
    fixed_val: float
    free_lo: float
    free_hi: float


@dataclass
class PointBatch:
    boundary: np.ndarray            # (n_bc, d), clause-major order
    boundary_clause: list           # clause name per boundary block
    boundary_counts: list           # points per clause, same order
    interior: np.ndarray            # (n_r, d)
    initial: np.ndarray | None      # (n_ic, d) or None
    seed: int

    @property
    def n_bc(self):
        return self.boundary.shape[0]

    @property
    def n_r(self):
        return self.interior.shape[0]

    @property
    def n_ic(self):
        return 0 if self.initial is None else self.initial.shape[0]


class ProblemSpec:
    """Base class; subclasses define geometry, operators and targets."""

    name = ""
    input_dim = 2
    output_dim = 1
    terms = ("bc", "r")
    gamma_default = 100.0
    # staircase lr decay per 1000 Adam steps; 1.0 keeps the rate constant
    lr_decay_default = 0.9
    counts_default = {"n_bc": 512, "n_r": 128}

    # -- geometry -----------------------------------------------------------
    bounds = np.array([[0.0, 1.0], [0.0, 1.0]])

    def edges(self):
        raise NotImplementedError

    def initial_edge(self):
        return None

    # -- ground truth -------------------------------------------------------
    def exact(self, pts):
        """Closed-form solution values (n, output_dim), or None."""
        return None

    def boundary_targets(self, clause, pts):
        raise NotImplementedError

    # -- sampling -----------------------------------------------------------
    def sample_points(self, counts=None, seed=0) -> PointBatch:
        counts = {**self.counts_default, **(counts or {})}
        rng = np.random.default_rng(seed)
        edges = self.edges()
        n_bc = counts["n_bc"]
        per = [n_bc // len(edges)] * len(edges)
        for i in range(n_bc - sum(per)):
            per[i] += 1
        blocks, names = [], []
        for clause, n_e in zip(edges, per):
            pts = np.empty((n_e, self.input_dim))
            free = 1 - clause.fixed_dim
            pts[:, clause.fixed_dim] = clause.fixed_val
            pts[:, free] = rng.uniform(clause.free_lo, clause.free_hi, n_e)
            blocks.append(pts)
            names.append(clause.name)
        interior = np.column_stack(
            [rng.uniform(lo, hi, counts["n_r"]) for lo, hi in self.bounds])
        initial = None
        init_edge = self.initial_edge()
        if init_edge is not None:
            n_ic = counts["n_ic"]
            initial = np.empty((n_ic, self.input_dim))
            initial[:, init_edge.fixed_dim] = init_edge.fixed_val
            initial[:, 1 - init_edge.fixed_dim] = rng.uniform(
                init_edge.free_lo, init_edge.free_hi, n_ic)
        return PointBatch(np.vstack(blocks), names, per, interior, initial, seed)

    def boundary_target_matrix(self, batch: PointBatch):
        rows = []
        off = 0
        for name, n_e in zip(batch.boundary_clause, batch.boundary_counts):
            rows.append(self.boundary_targets(name, batch.boundary[off:off + n_e]))
            off += n_e
        return np.vstack(rows)

    # -- graph construction -------------------------------------------------
    def build_losses(self, g: Graph, net: NetworkDef, blocks, batch: PointBatch):
        """Per-term scalar loss nodes {'ic': ..., 'bc': ..., 'r': ...}."""
        raise NotImplementedError

    def network_def(self, hidden_layers, units, kind):
        return NetworkDef(kind, self.input_dim, self.output_dim, hidden_layers, units)

    # -- evaluation ---------------------------------------------------------
    def eval_grid(self, n=100):
        axes = [np.linspace(lo, hi, n) for lo, hi in self.bounds]
        xx, yy = np.meshgrid(axes[0], axes[1], indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel()])


def loss_breakdown(spec: ProblemSpec, net: NetworkDef, params: ParameterSet,
                   batch: PointBatch) -> LossBreakdown:
    """Evaluate the collocation losses once for the given parameters."""
    for nm, n in (("boundary", batch.n_bc), ("interior", batch.n_r)):
        if n < 1:
            raise ContractViolation(f"batch has no {nm} points")
    if spec.initial_edge() is not None and batch.n_ic < 1:
        raise ContractViolation("batch has no initial points")
    g = Graph()
    blocks = register_blocks_for_net(g, net)
    losses = spec.build_losses(g, net, blocks, batch)
    g.freeze()
    g.set_params(params.vector)
    g.forward()
    vals = {k: float(g.value_of(v)[0, 0]) for k, v in losses.items()}
    return LossBreakdown(L_ic=vals.get("ic"), L_bc=vals.get("bc"), L_r=vals.get("r"))


def stacked_output(g, net, blocks, table, pts_or_name) -> NetOutput:
    """NetOutput over either fixed points or a named rebindable input."""
    if isinstance(pts_or_name, str):
        stack = jets.named_input_stack(g, table, pts_or_name, 2)
    else:
        stack = jets.input_stack(g, table, pts_or_name)
    return NetOutput(g, net, blocks, stack)
