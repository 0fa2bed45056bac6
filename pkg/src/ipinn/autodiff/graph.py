"""Expression tape: build-once, replay-many computation graphs.

A Graph is assembled from parameter blocks, constant/input arrays and a
fixed primitive set, then frozen. After freezing, forward() re-evaluates
every instruction in recording order into preallocated float64 buffers and
backward() runs the reverse sweep, accumulating adjoints. Re-running an
unchanged graph on unchanged inputs reproduces values bitwise.

All node payloads are 2-D C-contiguous float64 arrays. Binary elementwise
ops broadcast the right operand when it has a single row ((1, k) against
(n, k)) or is a (1, 1) scalar.

Two executors share the instruction encoding: the pure-NumPy one in
pyexec.py and the compiled one in _kernel.pyx (see engine.py for
selection).
"""

from __future__ import annotations

import numpy as np

from ..errors import ContractViolation, NumericError

# opcodes (shared with the compiled kernel; keep values stable)
ADD, SUB, MUL, DIV, NEG, POWI = 0, 1, 2, 3, 4, 5
SIN, COS, TANH, EXP, LOG, SQUARE = 6, 7, 8, 9, 10, 11
MEAN, MATMUL, COL = 12, 13, 14
JET_TANH, JET_MIX = 15, 16

OP_NAMES = [
    "add", "sub", "mul", "div", "neg", "powi",
    "sin", "cos", "tanh", "exp", "log", "square",
    "mean", "matmul", "col", "jet_tanh", "jet_mix",
]

_UNARY = {NEG, POWI, SIN, COS, TANH, EXP, LOG, SQUARE, MEAN, COL}
_BINARY = {ADD, SUB, MUL, DIV, MATMUL}


class ChannelTable:
    """Row layout of a stacked jet buffer.

    Channel 0 is the value channel and covers every point; derivative
    channels cover a tail of the point list (suffix alignment), so a row
    offset arithmetic suffices to line channels up. ``sec`` channels carry
    a list of (grad_channel_index, grad_channel_index, coefficient)
    triples describing the fixed second-derivative combination they
    propagate.
    """

    __slots__ = ("kinds", "counts", "offsets", "pairs", "total")

    def __init__(self, counts, kinds, pairs):
        if kinds[0] != "val":
            raise ContractViolation("channel 0 must be the value channel")
        if len(kinds) > 16:
            raise ContractViolation("at most 16 channels per stack")
        n_val = counts[0]
        offsets = []
        off = 0
        for n, kind in zip(counts, kinds):
            if n > n_val:
                raise ContractViolation("derivative channel larger than value channel")
            offsets.append(off)
            off += n
        self.kinds = tuple(kinds)
        self.counts = tuple(counts)
        self.offsets = tuple(offsets)
        self.pairs = tuple(tuple(p) if p else () for p in pairs)
        self.total = off
        for c, kind in enumerate(kinds):
            if kind == "sec":
                for gi, gj, _ in self.pairs[c]:
                    for gc in (gi, gj):
                        if kinds[gc] != "grad":
                            raise ContractViolation("sec pair must reference grad channels")
                        if self.counts[gc] < self.counts[c]:
                            raise ContractViolation("sec channel wider than its grad channels")

    def rows(self, c):
        return self.offsets[c], self.offsets[c] + self.counts[c]

    def tail_rows(self, c, n):
        """Rows of channel c for its last n points."""
        end = self.offsets[c] + self.counts[c]
        return end - n, end


class Node:
    __slots__ = ("graph", "idx")

    def __init__(self, graph, idx):
        self.graph = graph
        self.idx = idx

    @property
    def shape(self):
        return self.graph.shapes[self.idx]

    @property
    def value(self):
        return self.graph.values[self.idx]

    @property
    def grad(self):
        return self.graph.grads[self.idx]

    def _coerce(self, other):
        if isinstance(other, Node):
            if other.graph is not self.graph:
                raise ContractViolation("nodes belong to different graphs")
            return other
        return self.graph.const(other)

    def __add__(self, other):
        return self.graph._binary(ADD, self, self._coerce(other))

    def __radd__(self, other):
        return self.__add__(other)

    def __sub__(self, other):
        return self.graph._binary(SUB, self, self._coerce(other))

    def __rsub__(self, other):
        return self.graph._binary(ADD, self.graph._unary(NEG, self), self._coerce(other))

    def __mul__(self, other):
        return self.graph._binary(MUL, self, self._coerce(other))

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        return self.graph._binary(DIV, self, self._coerce(other))

    def __rtruediv__(self, other):
        return self.graph._binary(MUL, self.graph._unary(POWI, self, aux=-1), self._coerce(other))

    def __neg__(self):
        return self.graph._unary(NEG, self)

    def __pow__(self, k):
        if not isinstance(k, (int, np.integer)):
            raise ContractViolation("pow exponent must be an integer")
        return self.graph._unary(POWI, self, aux=int(k))


def _as_matrix(x):
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(-1, 1)
    elif a.ndim != 2:
        raise ContractViolation("node payloads are at most 2-D")
    return np.ascontiguousarray(a)


class Graph:
    def __init__(self):
        self.shapes = []
        self.values = []
        self.grads = []
        self.needs_grad = []
        self.alias_parent = []   # root nodes: -1
        self.instrs = []         # (op, out, a, b, c, aux)
        self.instr_of = {}       # out idx -> instr position
        self.param_blocks = []   # (name, offset, shape, node_idx)
        self.inputs = {}         # name -> node idx
        self.n_params = 0
        self.frozen = False
        self._exec = None

    # ------------------------------------------------------------------ build

    def _new_node(self, shape, alias=None):
        if self.frozen:
            raise ContractViolation("graph is frozen")
        rows, cols = int(shape[0]), int(shape[1])
        idx = len(self.shapes)
        self.shapes.append((rows, cols))
        if alias is None:
            self.values.append(np.zeros((rows, cols)))
            self.alias_parent.append(-1)
        else:
            parent, r0 = alias
            self.values.append(self.values[parent][r0:r0 + rows])
            self.alias_parent.append(parent)
        self.grads.append(None)
        self.needs_grad.append(False)
        return Node(self, idx)

    def param(self, name, shape):
        shape = (int(shape[0]), int(shape[1]))
        node = self._new_node(shape)
        self.param_blocks.append((name, self.n_params, shape, node.idx))
        self.n_params += shape[0] * shape[1]
        self.needs_grad[node.idx] = True
        return node

    def const(self, value):
        a = _as_matrix(value)
        node = self._new_node(a.shape)
        np.copyto(self.values[node.idx], a)
        return node

    def input(self, name, shape):
        node = self._new_node(shape)
        self.inputs[name] = node.idx
        return node

    def set_input(self, name, value):
        idx = self.inputs[name]
        a = _as_matrix(value)
        if a.shape != self.shapes[idx]:
            raise ContractViolation(
                f"input {name!r} expects shape {self.shapes[idx]}, got {a.shape}")
        np.copyto(self.values[idx], a)

    def _record(self, op, out, a, b=-1, c=-1, aux=None):
        self.instr_of[out.idx] = len(self.instrs)
        self.instrs.append((op, out.idx, a, b, c, aux))
        srcs = [i for i in (a, b, c) if i >= 0]
        self.needs_grad[out.idx] = any(self.needs_grad[i] for i in srcs)
        return out

    def _unary(self, op, a, aux=None):
        if op == MEAN:
            shape = (1, 1)
        elif op == COL:
            shape = (a.shape[0], 1)
        else:
            shape = a.shape
        out = self._new_node(shape)
        return self._record(op, out, a.idx, aux=aux)

    def _binary(self, op, a, b):
        ra, ca = a.shape
        rb, cb = b.shape
        if op == MATMUL:
            if ca != rb:
                raise ContractViolation(f"matmul shapes {a.shape} x {b.shape}")
            out = self._new_node((ra, cb))
            return self._record(op, out, a.idx, b.idx)
        # commutative ops put the broadcast operand on the right
        if op in (ADD, MUL) and (ra, ca) != (rb, cb) and rb > 1:
            a, b = b, a
            ra, ca, rb, cb = rb, cb, ra, ca
        if (rb, cb) != (ra, ca) and not (rb == 1 and cb in (1, ca)):
            raise ContractViolation(f"cannot broadcast {b.shape} against {a.shape}")
        out = self._new_node((ra, ca))
        return self._record(op, out, a.idx, b.idx)

    # primitive helpers
    def add(self, a, b):
        return self._binary(ADD, a, a._coerce(b))

    def sub(self, a, b):
        return self._binary(SUB, a, a._coerce(b))

    def mul(self, a, b):
        return self._binary(MUL, a, a._coerce(b))

    def div(self, a, b):
        return self._binary(DIV, a, a._coerce(b))

    def neg(self, a):
        return self._unary(NEG, a)

    def powi(self, a, k):
        return a ** k

    def sin(self, a):
        return self._unary(SIN, a)

    def cos(self, a):
        return self._unary(COS, a)

    def tanh(self, a):
        return self._unary(TANH, a)

    def exp(self, a):
        return self._unary(EXP, a)

    def log(self, a):
        return self._unary(LOG, a)

    def square(self, a):
        return self._unary(SQUARE, a)

    def mean(self, a):
        return self._unary(MEAN, a)

    def matmul(self, a, b):
        return self._binary(MATMUL, a, b)

    def col(self, a, j):
        if not 0 <= j < a.shape[1]:
            raise ContractViolation(f"column {j} out of range for {a.shape}")
        return self._unary(COL, a, aux=int(j))

    def rows(self, a, r0, r1):
        """Zero-cost row-window view; shares value and adjoint storage."""
        if not 0 <= r0 < r1 <= a.shape[0]:
            raise ContractViolation(f"rows [{r0}:{r1}] out of range for {a.shape}")
        node = self._new_node((r1 - r0, a.shape[1]), alias=(a.idx, r0))
        self.needs_grad[node.idx] = self.needs_grad[a.idx]
        return node

    def jet_tanh(self, z, bias, table: ChannelTable):
        if z.shape[0] != table.total:
            raise ContractViolation("stack rows do not match channel table")
        if bias is not None and bias.shape != (1, z.shape[1]):
            raise ContractViolation("bias must be (1, width)")
        out = self._new_node(z.shape)
        return self._record(JET_TANH, out, z.idx,
                            bias.idx if bias is not None else -1, aux=table)

    def jet_mix(self, u, v, t, table: ChannelTable):
        for s in (u, v, t):
            if s.shape != t.shape or s.shape[0] != table.total:
                raise ContractViolation("mix operands must share the stack layout")
        out = self._new_node(t.shape)
        return self._record(JET_MIX, out, u.idx, v.idx, t.idx, aux=table)

    # ------------------------------------------------------------------ run

    def freeze(self, engine="auto"):
        from .engine import make_executor
        if not self.frozen:
            self.frozen = True
            for i, ng in enumerate(self.needs_grad):
                if ng and self.alias_parent[i] == -1:
                    self.grads[i] = np.zeros(self.shapes[i])
            # alias grads come from their (possibly transitively) root parent
            for i, parent in enumerate(self.alias_parent):
                if parent != -1 and self.needs_grad[i]:
                    root, off = self._root_of(i)
                    rows = self.shapes[i][0]
                    self.grads[i] = self.grads[root][off:off + rows]
        self._exec = make_executor(self, engine)
        return self

    def _root_of(self, i):
        off = 0
        while self.alias_parent[i] != -1:
            parent = self.alias_parent[i]
            # row offset of the view within its parent
            pv = self.values[parent]
            off += (self.values[i].ctypes.data - pv.ctypes.data) // pv.strides[0]
            i = parent
        return i, off

    @property
    def engine_name(self):
        return self._exec.name

    def set_params(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.n_params,):
            raise ContractViolation(
                f"parameter vector length {theta.shape} != {self.n_params}")
        for _, off, shape, idx in self.param_blocks:
            size = shape[0] * shape[1]
            np.copyto(self.values[idx], theta[off:off + size].reshape(shape))

    def forward(self):
        self._exec.forward()

    def backward(self, seed: Node):
        if seed.shape != (1, 1):
            raise ContractViolation("backward seed must be a scalar node")
        if not self.needs_grad[seed.idx]:
            raise ContractViolation("seed does not depend on any parameter")
        self._exec.backward(seed.idx)

    def grad_vector(self):
        out = np.empty(self.n_params)
        for _, off, shape, idx in self.param_blocks:
            size = shape[0] * shape[1]
            g = self.grads[idx]
            out[off:off + size] = 0.0 if g is None else g.ravel()
        return out

    def value_of(self, node: Node):
        return self.values[node.idx]

    # ------------------------------------------------------------------ diag

    def check_finite(self, node: Node):
        """Raise NumericError naming the first non-finite instruction output."""
        if np.isfinite(self.values[node.idx]).all():
            return
        for op, out, *_ in self.instrs:
            if not np.isfinite(self.values[out]).all():
                raise NumericError(
                    f"non-finite value produced by {OP_NAMES[op]!r} node",
                    node_kind=OP_NAMES[op])
        raise NumericError("non-finite value in a leaf buffer", node_kind="leaf")

    def find_nonfinite_grad(self):
        for op, out, *_ in reversed(self.instrs):
            g = self.grads[out]
            if g is not None and not np.isfinite(g).all():
                return OP_NAMES[op]
        return None
