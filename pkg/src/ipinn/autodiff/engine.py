"""Executor selection: compiled kernel when available, NumPy fallback.

The environment variable IPINN_ENGINE forces a choice: "compiled",
"python", or "auto" (default).
"""

from __future__ import annotations

import os

import numpy as np

from . import graph as G
from .pyexec import PyExecutor

try:
    from . import _kernel
    HAVE_COMPILED = True
except ImportError:
    _kernel = None
    HAVE_COMPILED = False


def default_engine():
    forced = os.environ.get("IPINN_ENGINE", "auto").lower()
    if forced in ("auto", ""):
        return "compiled" if HAVE_COMPILED else "python"
    if forced not in ("compiled", "python"):
        raise ValueError(f"IPINN_ENGINE={forced!r} not recognised")
    return forced


def make_executor(g, engine="auto"):
    if engine == "auto":
        engine = default_engine()
    if engine == "compiled":
        if not HAVE_COMPILED:
            raise RuntimeError("compiled kernel requested but not built")
        return CompiledExecutor(g)
    if engine == "python":
        return PyExecutor(g)
    raise ValueError(f"unknown engine {engine!r}")


class CompiledExecutor:
    name = "compiled"

    def __init__(self, g):
        self.g = g
        self._prog = _kernel.Program(*lower(g))

    def forward(self):
        self._prog.forward()

    def backward(self, seed):
        self._prog.backward(seed)


def lower(g):
    """Flatten a frozen graph into the arrays the compiled kernel consumes."""
    n_instr = len(g.instrs)
    op = np.zeros(n_instr, dtype=np.int32)
    out = np.zeros(n_instr, dtype=np.int32)
    ia = np.zeros(n_instr, dtype=np.int32)
    ib = np.zeros(n_instr, dtype=np.int32)
    ic = np.zeros(n_instr, dtype=np.int32)
    apos = np.zeros(n_instr, dtype=np.int32)
    auxi = []
    auxd = []
    ufjobs = [None] * n_instr
    tanh_uf = np.tanh

    for k, (o, out_i, a, b, c, aux) in enumerate(g.instrs):
        op[k], out[k], ia[k], ib[k], ic[k] = o, out_i, a, b, c
        apos[k] = len(auxi)
        if o == G.POWI or o == G.COL:
            auxi.append(int(aux))
        elif o in (G.JET_TANH, G.JET_MIX):
            t = aux
            nch = len(t.kinds)
            auxi.append(nch)
            kind_code = {"val": 0, "grad": 1, "sec": 2}
            pair_blocks = []
            for ci in range(nch):
                pr = len(auxi) + (nch - ci) * 5 + sum(len(pb) for pb in pair_blocks)
                pairs = t.pairs[ci]
                auxi.extend([t.offsets[ci], t.counts[ci], kind_code[t.kinds[ci]],
                             len(pairs), pr])
                block = []
                for gi, gj, coef in pairs:
                    block.extend([gi, gj, len(auxd)])
                    auxd.append(float(coef))
                pair_blocks.append(block)
            for block in pair_blocks:
                auxi.extend(block)
            if o == G.JET_TANH:
                nv = t.counts[0]
                vo = g.values[out_i]
                ufjobs[k] = (tanh_uf, vo[:nv], vo[:nv])
        else:
            auxi.append(0)
        if o == G.TANH:
            ufjobs[k] = (tanh_uf, g.values[a], g.values[out_i])

    auxi = np.asarray(auxi if auxi else [0], dtype=np.int32)
    auxd = np.asarray(auxd if auxd else [0.0], dtype=np.float64)
    root_grads = [i for i in range(len(g.values))
                  if g.grads[i] is not None and g.alias_parent[i] == -1]
    root_grads = np.asarray(root_grads, dtype=np.int32)
    needs = np.asarray(g.needs_grad, dtype=np.int8)
    return (g.values, g.grads, needs, root_grads,
            op, out, ia, ib, ic, apos, auxi, auxd, ufjobs)
