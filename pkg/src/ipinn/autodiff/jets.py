"""Jet propagation: value + first + selected second input derivatives.

Two equivalent routes are provided.

Fused route (training): a jet lives in one stacked buffer (JetStack) whose
row layout is a ChannelTable; layers advance it with a single matmul plus
the fused JET_TANH / JET_MIX instructions. Derivative channels may cover
only a tail of the point list and may carry a fixed linear combination of
second derivatives (e.g. a Laplacian channel).

Composed route (eval_jet2, cross-checks): a jet is a bundle of per-channel
nodes (JetParts) advanced with the small primitive set only. Structural
zeros are represented by None so affine networks keep exactly-zero second
derivatives.
"""

from __future__ import annotations

import numpy as np

from ..errors import ContractViolation
from .graph import ChannelTable, Graph, Node


# ---------------------------------------------------------------- fused path

class JetStack:
    __slots__ = ("node", "table")

    def __init__(self, node: Node, table: ChannelTable):
        self.node = node
        self.table = table

    @property
    def graph(self):
        return self.node.graph

    def chan(self, c) -> Node:
        r0, r1 = self.table.rows(c)
        return self.graph.rows(self.node, r0, r1)

    def chan_head(self, c, n) -> Node:
        r0, _ = self.table.rows(c)
        return self.graph.rows(self.node, r0, r0 + n)

    def chan_tail(self, c, n) -> Node:
        r0, r1 = self.table.tail_rows(c, n)
        return self.graph.rows(self.node, r0, r1)


def stack_buffer(table: ChannelTable, points: np.ndarray) -> np.ndarray:
    """Raw jet buffer of the input coordinates: value rows carry the
    points, each grad channel a one-hot column, second rows stay zero."""
    d = points.shape[1]
    if points.shape[0] != table.counts[0]:
        raise ContractViolation("point count does not match value channel")
    buf = np.zeros((table.total, d))
    buf[:table.counts[0]] = points
    dim = 0
    for c in range(1, len(table.kinds)):
        if table.kinds[c] == "grad":
            r0, r1 = table.rows(c)
            buf[r0:r1, dim] = 1.0
            dim += 1
    if dim not in (0, d):
        raise ContractViolation(f"expected {d} grad channels, found {dim}")
    return buf


def input_stack(g: Graph, table: ChannelTable, points: np.ndarray) -> JetStack:
    """Constant jet of the input coordinates themselves."""
    return JetStack(g.const(stack_buffer(table, points)), table)


def named_input_stack(g: Graph, table: ChannelTable, name: str, d: int) -> JetStack:
    """Rebindable input jet (for batch resampling); fill with stack_buffer."""
    return JetStack(g.input(name, (table.total, d)), table)


def stack_linear(J: JetStack, w: Node) -> JetStack:
    return JetStack(J.graph.matmul(J.node, w), J.table)


def stack_tanh(J: JetStack, bias: Node | None) -> JetStack:
    return JetStack(J.graph.jet_tanh(J.node, bias, J.table), J.table)


def stack_mix(u: JetStack, v: JetStack, t: JetStack) -> JetStack:
    return JetStack(t.graph.jet_mix(u.node, v.node, t.node, t.table), t.table)


def residual_table(n_val, n_deriv, dims, sec_pairs):
    """Channel table with full-width value rows, tail grad channels for
    every input dimension and one combined second-derivative channel."""
    counts = [n_val] + [n_deriv] * dims + [n_deriv]
    kinds = ["val"] + ["grad"] * dims + ["sec"]
    pairs = [()] * (1 + dims) + [tuple((1 + i, 1 + j, c) for i, j, c in sec_pairs)]
    return ChannelTable(counts, kinds, pairs)


def value_table(n_val):
    return ChannelTable([n_val], ["val"], [()])


# ------------------------------------------------------------- composed path

class JetParts:
    """Per-channel jet for the composed route. grads[i] / secs[(i,j)] may be
    None, meaning exactly zero."""

    __slots__ = ("val", "grads", "secs")

    def __init__(self, val: Node, grads, secs):
        self.val = val
        self.grads = list(grads)
        self.secs = dict(secs)

    @property
    def graph(self):
        return self.val.graph


def _pairkey(i, j):
    return (i, j) if i <= j else (j, i)


def jet_input(g: Graph, points: np.ndarray, pairs) -> JetParts:
    """Matrix jet of the raw coordinates: grads are one-hot columns."""
    n, d = points.shape
    val = g.const(points)
    grads = []
    for i in range(d):
        onehot = np.zeros((n, d))
        onehot[:, i] = 1.0
        grads.append(g.const(onehot))
    secs = {_pairkey(i, j): None for i, j in pairs}
    return JetParts(val, grads, secs)


def jet_coord(g: Graph, points: np.ndarray, dim: int, ndims: int, pairs) -> JetParts:
    """Scalar jet of a single coordinate (for hand-built expressions)."""
    n = points.shape[0]
    val = g.const(points[:, dim:dim + 1])
    grads = [g.const(np.ones((n, 1))) if i == dim else None for i in range(ndims)]
    secs = {_pairkey(i, j): None for i, j in pairs}
    return JetParts(val, grads, secs)


def jet_const(g: Graph, value, ndims: int, pairs) -> JetParts:
    return JetParts(g.const(value), [None] * ndims,
                    {_pairkey(i, j): None for i, j in pairs})


def jet_param(node: Node, ndims: int, pairs) -> JetParts:
    """A trainable quantity viewed as input-independent (zero input derivatives)."""
    return JetParts(node, [None] * ndims, {_pairkey(i, j): None for i, j in pairs})


def jet_linear(J: JetParts, w: Node, b: Node | None) -> JetParts:
    g = J.graph
    val = g.matmul(J.val, w)
    if b is not None:
        val = val + b
    grads = [None if gr is None else g.matmul(gr, w) for gr in J.grads]
    secs = {k: (None if s is None else g.matmul(s, w)) for k, s in J.secs.items()}
    return JetParts(val, grads, secs)


def jet_add(a: JetParts, b: JetParts) -> JetParts:
    def comb(x, y):
        if x is None:
            return y
        if y is None:
            return x
        return x + y
    return JetParts(a.val + b.val,
                    [comb(x, y) for x, y in zip(a.grads, b.grads)],
                    {k: comb(a.secs[k], b.secs[k]) for k in a.secs})


def jet_sub(a: JetParts, b: JetParts) -> JetParts:
    def comb(x, y):
        if y is None:
            return x
        if x is None:
            return -y
        return x - y
    return JetParts(a.val - b.val,
                    [comb(x, y) for x, y in zip(a.grads, b.grads)],
                    {k: comb(a.secs[k], b.secs[k]) for k in a.secs})


def jet_mul(a: JetParts, b: JetParts) -> JetParts:
    def mul(x, y):
        return None if (x is None or y is None) else x * y

    def add(*terms):
        out = None
        for t in terms:
            if t is not None:
                out = t if out is None else out + t
        return out

    val = a.val * b.val
    grads = [add(mul(ga, b.val), mul(gb, a.val))
             for ga, gb in zip(a.grads, b.grads)]
    secs = {}
    for (i, j) in a.secs:
        cross = add(mul(a.grads[i], b.grads[j]), mul(a.grads[j], b.grads[i]))
        secs[(i, j)] = add(mul(a.secs[(i, j)], b.val), cross,
                           mul(b.secs[(i, j)], a.val))
    return JetParts(val, grads, secs)


def jet_tanh(J: JetParts) -> JetParts:
    g = J.graph
    t = g.tanh(J.val)
    o = 1.0 - g.square(t)
    grads = [None if gr is None else o * gr for gr in J.grads]
    secs = {}
    for (i, j), s in J.secs.items():
        term = None if s is None else o * s
        gi, gj = J.grads[i], J.grads[j]
        if gi is not None and gj is not None:
            cross = (2.0 * t) * o * gi * gj
            term = -cross if term is None else term - cross
        secs[(i, j)] = term
    return JetParts(t, grads, secs)


def jet_scale(J: JetParts, c: float) -> JetParts:
    return JetParts(J.val * c,
                    [None if gr is None else gr * c for gr in J.grads],
                    {k: (None if s is None else s * c) for k, s in J.secs.items()})


def jet_mix_parts(u: JetParts, v: JetParts, t: JetParts) -> JetParts:
    return jet_add(u, jet_mul(t, jet_sub(v, u)))
