"""Pure-NumPy tape executor (fallback when the compiled kernel is absent)."""

from __future__ import annotations

import numpy as np

from . import graph as G


def _tail(arr, n):
    return arr[arr.shape[0] - n:]


class PyExecutor:
    name = "python"

    def __init__(self, g):
        self.g = g

    # ------------------------------------------------------------- forward

    def forward(self):
        g = self.g
        V = g.values
        with np.errstate(all="ignore"):
            for op, out, a, b, c, aux in g.instrs:
                vo = V[out]
                if op == G.ADD:
                    np.add(V[a], V[b], out=vo)
                elif op == G.SUB:
                    np.subtract(V[a], V[b], out=vo)
                elif op == G.MUL:
                    np.multiply(V[a], V[b], out=vo)
                elif op == G.DIV:
                    np.divide(V[a], V[b], out=vo)
                elif op == G.NEG:
                    np.negative(V[a], out=vo)
                elif op == G.POWI:
                    np.power(V[a], aux, out=vo)
                elif op == G.SIN:
                    np.sin(V[a], out=vo)
                elif op == G.COS:
                    np.cos(V[a], out=vo)
                elif op == G.TANH:
                    np.tanh(V[a], out=vo)
                elif op == G.EXP:
                    np.exp(V[a], out=vo)
                elif op == G.LOG:
                    np.log(V[a], out=vo)
                elif op == G.SQUARE:
                    np.multiply(V[a], V[a], out=vo)
                elif op == G.MEAN:
                    vo[0, 0] = V[a].mean()
                elif op == G.MATMUL:
                    np.matmul(V[a], V[b], out=vo)
                elif op == G.COL:
                    np.copyto(vo, V[a][:, aux:aux + 1])
                elif op == G.JET_TANH:
                    self._jet_tanh_fwd(V[a], None if b < 0 else V[b], vo, aux)
                elif op == G.JET_MIX:
                    self._jet_mix_fwd(V[a], V[b], V[c], vo, aux)
                else:
                    raise AssertionError(f"bad opcode {op}")

    # ------------------------------------------------------------- backward

    def backward(self, seed):
        g = self.g
        V, Gr, ng = g.values, g.grads, g.needs_grad
        for i, gr in enumerate(Gr):
            if gr is not None and g.alias_parent[i] == -1:
                gr.fill(0.0)
        Gr[seed][0, 0] = 1.0
        with np.errstate(all="ignore"):
            for op, out, a, b, c, aux in reversed(g.instrs):
                if not ng[out]:
                    continue
                go = Gr[out]
                if op == G.ADD:
                    if ng[a]:
                        Gr[a] += go
                    if ng[b]:
                        self._acc(Gr[b], go)
                elif op == G.SUB:
                    if ng[a]:
                        Gr[a] += go
                    if ng[b]:
                        self._acc(Gr[b], -go)
                elif op == G.MUL:
                    if ng[a]:
                        Gr[a] += go * V[b]
                    if ng[b]:
                        self._acc(Gr[b], go * V[a])
                elif op == G.DIV:
                    if ng[a]:
                        Gr[a] += go / V[b]
                    if ng[b]:
                        self._acc(Gr[b], -go * V[out] / V[b])
                elif op == G.NEG:
                    if ng[a]:
                        Gr[a] -= go
                elif op == G.POWI:
                    if ng[a]:
                        Gr[a] += go * aux * V[a] ** (aux - 1)
                elif op == G.SIN:
                    if ng[a]:
                        Gr[a] += go * np.cos(V[a])
                elif op == G.COS:
                    if ng[a]:
                        Gr[a] -= go * np.sin(V[a])
                elif op == G.TANH:
                    if ng[a]:
                        Gr[a] += go * (1.0 - V[out] * V[out])
                elif op == G.EXP:
                    if ng[a]:
                        Gr[a] += go * V[out]
                elif op == G.LOG:
                    if ng[a]:
                        Gr[a] += go / V[a]
                elif op == G.SQUARE:
                    if ng[a]:
                        Gr[a] += 2.0 * go * V[a]
                elif op == G.MEAN:
                    if ng[a]:
                        Gr[a] += go[0, 0] / V[a].size
                elif op == G.MATMUL:
                    if ng[a]:
                        Gr[a] += go @ V[b].T
                    if ng[b]:
                        Gr[b] += V[a].T @ go
                elif op == G.COL:
                    if ng[a]:
                        Gr[a][:, aux:aux + 1] += go
                elif op == G.JET_TANH:
                    self._jet_tanh_bwd(go, V[a], V[out], Gr[a] if ng[a] else None,
                                       Gr[b] if b >= 0 and ng[b] else None, aux)
                elif op == G.JET_MIX:
                    self._jet_mix_bwd(go, V[a], V[b], V[c],
                                      Gr[a] if ng[a] else None,
                                      Gr[b] if ng[b] else None,
                                      Gr[c] if ng[c] else None, aux)

    @staticmethod
    def _acc(gb, contrib):
        """Accumulate a full-shape contribution into a possibly broadcast slot."""
        if gb.shape == contrib.shape:
            gb += contrib
        elif gb.shape == (1, 1):
            gb[0, 0] += contrib.sum()
        else:
            gb += contrib.sum(axis=0, keepdims=True)

    # ---------------------------------------------------------- jet kernels

    @staticmethod
    def _sec_product(z, t: G.ChannelTable, c, n):
        """sum of coef * zg_i * zg_j over channel c's pair list, tail-aligned."""
        acc = None
        for gi, gj, coef in t.pairs[c]:
            r0, r1 = t.tail_rows(gi, n)
            s0, s1 = t.tail_rows(gj, n)
            term = coef * z[r0:r1] * z[s0:s1]
            acc = term if acc is None else acc + term
        return acc

    def _jet_tanh_fwd(self, z, bias, outv, t: G.ChannelTable):
        nv = t.counts[0]
        if bias is None:
            np.tanh(z[:nv], out=outv[:nv])
        else:
            np.add(z[:nv], bias, out=outv[:nv])
            np.tanh(outv[:nv], out=outv[:nv])
        tv = outv[:nv]
        o = 1.0 - tv * tv
        for c in range(1, len(t.kinds)):
            off, n = t.offsets[c], t.counts[c]
            osfx = _tail(o, n)
            if t.kinds[c] == "grad":
                np.multiply(osfx, z[off:off + n], out=outv[off:off + n])
            else:
                p = self._sec_product(z, t, c, n)
                np.copyto(outv[off:off + n],
                          osfx * (z[off:off + n] - 2.0 * _tail(tv, n) * p))

    def _jet_tanh_bwd(self, go, z, outv, gz, gbias, t: G.ChannelTable):
        nv = t.counts[0]
        tv = outv[:nv]
        o = 1.0 - tv * tv
        acc = go[:nv].copy()
        for c in range(1, len(t.kinds)):
            off, n = t.offsets[c], t.counts[c]
            gc = go[off:off + n]
            ts, os_ = _tail(tv, n), _tail(o, n)
            if t.kinds[c] == "grad":
                _tail(acc, n)[...] += gc * (-2.0 * ts * z[off:off + n])
            else:
                p = self._sec_product(z, t, c, n)
                _tail(acc, n)[...] += gc * (-2.0 * ts * z[off:off + n]
                                            - 2.0 * (os_ - 2.0 * ts * ts) * p)
        dval = acc * o
        if gz is not None:
            gz[:nv] += dval
            for c in range(1, len(t.kinds)):
                off, n = t.offsets[c], t.counts[c]
                gc = go[off:off + n]
                os_ = _tail(o, n)
                if t.kinds[c] == "grad":
                    gz[off:off + n] += gc * os_
                else:
                    gz[off:off + n] += gc * os_
                    m2to = gc * (-2.0 * _tail(tv, n) * os_)
                    for gi, gj, coef in t.pairs[c]:
                        r0, r1 = t.tail_rows(gi, n)
                        s0, s1 = t.tail_rows(gj, n)
                        gz[r0:r1] += (coef * m2to) * z[s0:s1]
                        gz[s0:s1] += (coef * m2to) * z[r0:r1]
        if gbias is not None:
            gbias += dval.sum(axis=0, keepdims=True)

    def _jet_mix_fwd(self, u, v, tv_, outv, t: G.ChannelTable):
        nv = t.counts[0]
        w = v[:nv] - u[:nv]
        tval = tv_[:nv]
        np.copyto(outv[:nv], u[:nv] + tval * w)
        for c in range(1, len(t.kinds)):
            off, n = t.offsets[c], t.counts[c]
            sl = slice(off, off + n)
            wg = v[sl] - u[sl]
            if t.kinds[c] == "grad":
                np.copyto(outv[sl], u[sl] + tv_[sl] * _tail(w, n) + _tail(tval, n) * wg)
            else:
                cross = np.zeros_like(wg)
                for gi, gj, coef in t.pairs[c]:
                    r0, r1 = t.tail_rows(gi, n)
                    s0, s1 = t.tail_rows(gj, n)
                    cross += coef * (tv_[r0:r1] * (v[s0:s1] - u[s0:s1])
                                     + tv_[s0:s1] * (v[r0:r1] - u[r0:r1]))
                np.copyto(outv[sl], u[sl] + tv_[sl] * _tail(w, n) + cross
                          + _tail(tval, n) * wg)

    def _jet_mix_bwd(self, go, u, v, tv_, gu, gv, gt, t: G.ChannelTable):
        nv = t.counts[0]
        w = v[:nv] - u[:nv]
        tval = tv_[:nv]
        gm = go[:nv]
        if gu is not None:
            gu[:nv] += gm * (1.0 - tval)
        if gv is not None:
            gv[:nv] += gm * tval
        if gt is not None:
            gt[:nv] += gm * w
        for c in range(1, len(t.kinds)):
            off, n = t.offsets[c], t.counts[c]
            sl = slice(off, off + n)
            gc = go[sl]
            wg = v[sl] - u[sl]
            tvs = _tail(tval, n)
            if gu is not None:
                gu[sl] += gc * (1.0 - tvs)
                _tail(gu[:nv], n)[...] -= gc * tv_[sl]
            if gv is not None:
                gv[sl] += gc * tvs
                _tail(gv[:nv], n)[...] += gc * tv_[sl]
            if gt is not None:
                gt[sl] += gc * _tail(w, n)
                _tail(gt[:nv], n)[...] += gc * wg
            if t.kinds[c] == "sec":
                for gi, gj, coef in t.pairs[c]:
                    r0, r1 = t.tail_rows(gi, n)
                    s0, s1 = t.tail_rows(gj, n)
                    if gt is not None:
                        gt[r0:r1] += (coef * gc) * (v[s0:s1] - u[s0:s1])
                        gt[s0:s1] += (coef * gc) * (v[r0:r1] - u[r0:r1])
                    if gu is not None:
                        gu[s0:s1] -= (coef * gc) * tv_[r0:r1]
                        gu[r0:r1] -= (coef * gc) * tv_[s0:s1]
                    if gv is not None:
                        gv[s0:s1] += (coef * gc) * tv_[r0:r1]
                        gv[r0:r1] += (coef * gc) * tv_[s0:s1]
