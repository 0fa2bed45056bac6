# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled tape executor.

Mirrors pyexec.PyExecutor instruction-for-instruction: flat C loops with
hoisted base pointers for elementwise work, BLAS dgemm for matmuls, and
NumPy's vectorised tanh for the large activation buffers (called through
cached (ufunc, in, out) triples prepared by engine.lower).
"""

from libc.stdlib cimport malloc, free
from libc.string cimport memset, memcpy
from libc.math cimport sin, cos, exp, log, pow

from scipy.linalg.cython_blas cimport dgemm

import numpy as np

cdef enum:
    ADD = 0
    SUB = 1
    MUL = 2
    DIV = 3
    NEG = 4
    POWI = 5
    SIN_ = 6
    COS_ = 7
    TANH_ = 8
    EXP_ = 9
    LOG_ = 10
    SQUARE = 11
    MEAN = 12
    MATMUL = 13
    COL = 14
    JET_TANH = 15
    JET_MIX = 16

DEF MAXCH = 16
DEF MAXP = 8


cdef inline void mm_nn(double* A, double* B, double* C,
                       int m, int k, int n, double alpha, double beta) noexcept:
    # row-major C(m,n) = alpha * A(m,k) @ B(k,n) + beta * C
    dgemm("N", "N", &n, &m, &k, &alpha, B, &n, A, &k, &beta, C, &n)


cdef inline void mm_nt(double* A, double* B, double* C,
                       int m, int k, int n, double alpha, double beta) noexcept:
    # row-major C(m,n) = alpha * A(m,k) @ B(n,k)^T + beta * C
    dgemm("T", "N", &n, &m, &k, &alpha, B, &k, A, &k, &beta, C, &n)


cdef inline void mm_tn(double* A, double* B, double* C,
                       int m, int k, int n, double alpha, double beta) noexcept:
    # row-major C(m,n) = alpha * A(k,m)^T @ B(k,n) + beta * C
    dgemm("N", "T", &n, &m, &k, &alpha, B, &n, A, &m, &beta, C, &n)


cdef struct ChInfo:
    int off
    int n
    int kind
    int npairs
    int ppos


cdef class Program:
    cdef double** vp
    cdef double** gp
    cdef int* nrows
    cdef int* ncols
    cdef char* ng
    cdef double* scratch
    cdef int n_nodes
    cdef int n_instr
    cdef int[::1] op, outn, ia, ib, icn, apos, auxi, rootg
    cdef double[::1] auxd
    cdef list keep
    cdef list ufjobs

    def __cinit__(self, values, grads, needs, root_grads,
                  op, outn, ia, ib, icn, apos, auxi, auxd, ufjobs):
        cdef int i, sz, mx = 1
        self.keep = [values, grads, ufjobs]
        self.ufjobs = ufjobs
        self.n_nodes = len(values)
        self.n_instr = op.shape[0]
        self.op, self.outn, self.ia, self.ib, self.icn = op, outn, ia, ib, icn
        self.apos, self.auxi, self.auxd, self.rootg = apos, auxi, auxd, root_grads
        self.vp = <double**> malloc(self.n_nodes * sizeof(double*))
        self.gp = <double**> malloc(self.n_nodes * sizeof(double*))
        self.nrows = <int*> malloc(self.n_nodes * sizeof(int))
        self.ncols = <int*> malloc(self.n_nodes * sizeof(int))
        self.ng = <char*> malloc(self.n_nodes * sizeof(char))
        for i in range(self.n_nodes):
            v = values[i]
            assert v.flags["C_CONTIGUOUS"] and v.dtype == np.float64
            self.vp[i] = <double*> <size_t> v.ctypes.data
            self.nrows[i] = v.shape[0]
            self.ncols[i] = v.shape[1]
            sz = self.nrows[i] * self.ncols[i]
            if sz > mx:
                mx = sz
            g = grads[i]
            if g is None:
                self.gp[i] = NULL
            else:
                assert g.flags["C_CONTIGUOUS"]
                self.gp[i] = <double*> <size_t> g.ctypes.data
            self.ng[i] = 1 if needs[i] else 0
        self.scratch = <double*> malloc(mx * sizeof(double))

    def __dealloc__(self):
        free(self.vp)
        free(self.gp)
        free(self.nrows)
        free(self.ncols)
        free(self.ng)
        free(self.scratch)

    cdef void _load_table(self, int ap, ChInfo* ch, int* nch) noexcept:
        cdef int c
        nch[0] = self.auxi[ap]
        for c in range(nch[0]):
            ch[c].off = self.auxi[ap + 1 + 5 * c]
            ch[c].n = self.auxi[ap + 1 + 5 * c + 1]
            ch[c].kind = self.auxi[ap + 1 + 5 * c + 2]
            ch[c].npairs = self.auxi[ap + 1 + 5 * c + 3]
            ch[c].ppos = self.auxi[ap + 1 + 5 * c + 4]

    # ------------------------------------------------------------- forward

    def forward(self):
        cdef int k, o, oi, a, b, ap
        cdef int m, kk, n, sz, i
        cdef double* va
        cdef double* vo
        cdef double acc
        for k in range(self.n_instr):
            o = self.op[k]
            oi = self.outn[k]
            a = self.ia[k]
            b = self.ib[k]
            ap = self.apos[k]
            vo = self.vp[oi]
            va = self.vp[a]
            if o <= DIV:
                self._ew_fwd(o, a, b, oi)
            elif o == NEG:
                sz = self.nrows[a] * self.ncols[a]
                for i in range(sz):
                    vo[i] = -va[i]
            elif o == POWI:
                sz = self.nrows[a] * self.ncols[a]
                for i in range(sz):
                    vo[i] = pow(va[i], <double> self.auxi[ap])
            elif o == SIN_:
                sz = self.nrows[a] * self.ncols[a]
                for i in range(sz):
                    vo[i] = sin(va[i])
            elif o == COS_:
                sz = self.nrows[a] * self.ncols[a]
                for i in range(sz):
                    vo[i] = cos(va[i])
            elif o == TANH_:
                job = self.ufjobs[k]
                job[0](job[1], job[2])
            elif o == EXP_:
                sz = self.nrows[a] * self.ncols[a]
                for i in range(sz):
                    vo[i] = exp(va[i])
            elif o == LOG_:
                sz = self.nrows[a] * self.ncols[a]
                for i in range(sz):
                    vo[i] = log(va[i])
            elif o == SQUARE:
                sz = self.nrows[a] * self.ncols[a]
                for i in range(sz):
                    vo[i] = va[i] * va[i]
            elif o == MEAN:
                sz = self.nrows[a] * self.ncols[a]
                acc = 0.0
                for i in range(sz):
                    acc += va[i]
                vo[0] = acc / sz
            elif o == MATMUL:
                m = self.nrows[a]
                kk = self.ncols[a]
                n = self.ncols[b]
                mm_nn(va, self.vp[b], vo, m, kk, n, 1.0, 0.0)
            elif o == COL:
                n = self.ncols[a]
                kk = self.auxi[ap]
                for i in range(self.nrows[a]):
                    vo[i] = va[i * n + kk]
            elif o == JET_TANH:
                self._jet_tanh_fwd(k)
            else:
                self._jet_mix_fwd(k)

    cdef void _ew_fwd(self, int o, int a, int b, int oi) noexcept:
        cdef double* va = self.vp[a]
        cdef double* vb = self.vp[b]
        cdef double* vo = self.vp[oi]
        cdef int ra = self.nrows[a], ca = self.ncols[a]
        cdef int rb = self.nrows[b], cb = self.ncols[b]
        cdef int n = ra * ca, i, r, j
        cdef double s
        if rb == ra and cb == ca:
            if o == ADD:
                for i in range(n):
                    vo[i] = va[i] + vb[i]
            elif o == SUB:
                for i in range(n):
                    vo[i] = va[i] - vb[i]
            elif o == MUL:
                for i in range(n):
                    vo[i] = va[i] * vb[i]
            else:
                for i in range(n):
                    vo[i] = va[i] / vb[i]
        elif rb == 1 and cb == 1:
            s = vb[0]
            if o == ADD:
                for i in range(n):
                    vo[i] = va[i] + s
            elif o == SUB:
                for i in range(n):
                    vo[i] = va[i] - s
            elif o == MUL:
                for i in range(n):
                    vo[i] = va[i] * s
            else:
                for i in range(n):
                    vo[i] = va[i] / s
        else:
            for r in range(ra):
                i = r * ca
                if o == ADD:
                    for j in range(ca):
                        vo[i + j] = va[i + j] + vb[j]
                elif o == SUB:
                    for j in range(ca):
                        vo[i + j] = va[i + j] - vb[j]
                elif o == MUL:
                    for j in range(ca):
                        vo[i + j] = va[i + j] * vb[j]
                else:
                    for j in range(ca):
                        vo[i + j] = va[i + j] / vb[j]

    # ------------------------------------------------------------ backward

    def backward(self, int seed):
        cdef int k, o, oi, a, b, ap
        cdef int m, kk, n, sz, i, c
        cdef double* va
        cdef double* vo
        cdef double* go
        cdef double* ga
        cdef double gm
        for k in range(self.rootg.shape[0]):
            i = self.rootg[k]
            memset(self.gp[i], 0, self.nrows[i] * self.ncols[i] * sizeof(double))
        self.gp[seed][0] = 1.0
        for k in range(self.n_instr - 1, -1, -1):
            oi = self.outn[k]
            if not self.ng[oi]:
                continue
            o = self.op[k]
            a = self.ia[k]
            b = self.ib[k]
            ap = self.apos[k]
            go = self.gp[oi]
            vo = self.vp[oi]
            va = self.vp[a]
            ga = self.gp[a]
            sz = self.nrows[a] * self.ncols[a]
            if o <= DIV:
                self._ew_bwd(o, a, b, oi)
            elif o == NEG:
                if self.ng[a]:
                    for i in range(sz):
                        ga[i] -= go[i]
            elif o == POWI:
                if self.ng[a]:
                    gm = <double> self.auxi[ap]
                    for i in range(sz):
                        ga[i] += go[i] * gm * pow(va[i], gm - 1.0)
            elif o == SIN_:
                if self.ng[a]:
                    for i in range(sz):
                        ga[i] += go[i] * cos(va[i])
            elif o == COS_:
                if self.ng[a]:
                    for i in range(sz):
                        ga[i] -= go[i] * sin(va[i])
            elif o == TANH_:
                if self.ng[a]:
                    for i in range(sz):
                        ga[i] += go[i] * (1.0 - vo[i] * vo[i])
            elif o == EXP_:
                if self.ng[a]:
                    for i in range(sz):
                        ga[i] += go[i] * vo[i]
            elif o == LOG_:
                if self.ng[a]:
                    for i in range(sz):
                        ga[i] += go[i] / va[i]
            elif o == SQUARE:
                if self.ng[a]:
                    for i in range(sz):
                        ga[i] += 2.0 * go[i] * va[i]
            elif o == MEAN:
                if self.ng[a]:
                    gm = go[0] / sz
                    for i in range(sz):
                        ga[i] += gm
            elif o == MATMUL:
                m = self.nrows[a]
                kk = self.ncols[a]
                n = self.ncols[b]
                if self.ng[a]:
                    mm_nt(go, self.vp[b], ga, m, n, kk, 1.0, 1.0)
                if self.ng[b]:
                    mm_tn(va, go, self.gp[b], kk, m, n, 1.0, 1.0)
            elif o == COL:
                if self.ng[a]:
                    n = self.ncols[a]
                    c = self.auxi[ap]
                    for i in range(self.nrows[a]):
                        ga[i * n + c] += go[i]
            elif o == JET_TANH:
                self._jet_tanh_bwd(k)
            else:
                self._jet_mix_bwd(k)

    cdef void _ew_bwd(self, int o, int a, int b, int oi) noexcept:
        cdef double* va = self.vp[a]
        cdef double* vb = self.vp[b]
        cdef double* vo = self.vp[oi]
        cdef double* go = self.gp[oi]
        cdef double* ga = self.gp[a] if self.ng[a] else NULL
        cdef double* gb = self.gp[b] if self.ng[b] else NULL
        cdef int ra = self.nrows[a], ca = self.ncols[a]
        cdef int rb = self.nrows[b], cb = self.ncols[b]
        cdef int n = ra * ca, i, r, j
        cdef double s, accd
        cdef bint full = (rb == ra and cb == ca)
        cdef bint scal = (rb == 1 and cb == 1)
        if o == ADD or o == SUB:
            s = 1.0 if o == ADD else -1.0
            if ga != NULL:
                for i in range(n):
                    ga[i] += go[i]
            if gb != NULL:
                if full:
                    for i in range(n):
                        gb[i] += s * go[i]
                elif scal:
                    accd = 0.0
                    for i in range(n):
                        accd += go[i]
                    gb[0] += s * accd
                else:
                    for r in range(ra):
                        for j in range(ca):
                            gb[j] += s * go[r * ca + j]
        elif o == MUL:
            if full:
                if ga != NULL:
                    for i in range(n):
                        ga[i] += go[i] * vb[i]
                if gb != NULL:
                    for i in range(n):
                        gb[i] += go[i] * va[i]
            elif scal:
                s = vb[0]
                accd = 0.0
                for i in range(n):
                    accd += go[i] * va[i]
                if ga != NULL:
                    for i in range(n):
                        ga[i] += go[i] * s
                if gb != NULL:
                    gb[0] += accd
            else:
                for r in range(ra):
                    for j in range(ca):
                        i = r * ca + j
                        if ga != NULL:
                            ga[i] += go[i] * vb[j]
                        if gb != NULL:
                            gb[j] += go[i] * va[i]
        else:  # DIV
            if full:
                for i in range(n):
                    if ga != NULL:
                        ga[i] += go[i] / vb[i]
                    if gb != NULL:
                        gb[i] -= go[i] * vo[i] / vb[i]
            elif scal:
                s = 1.0 / vb[0]
                accd = 0.0
                for i in range(n):
                    accd -= go[i] * vo[i] * s
                if ga != NULL:
                    for i in range(n):
                        ga[i] += go[i] * s
                if gb != NULL:
                    gb[0] += accd
            else:
                for r in range(ra):
                    for j in range(ca):
                        i = r * ca + j
                        if ga != NULL:
                            ga[i] += go[i] / vb[j]
                        if gb != NULL:
                            gb[j] -= go[i] * vo[i] / vb[j]

    # -------------------------------------------------------- jet kernels

    cdef void _jet_tanh_fwd(self, int k):
        cdef int ap = self.apos[k]
        cdef ChInfo ch[MAXCH]
        cdef int nch
        self._load_table(ap, ch, &nch)
        cdef int oi = self.outn[k], a = self.ia[k], b = self.ib[k]
        cdef double* z = self.vp[a]
        cdef double* t = self.vp[oi]
        cdef double* bias
        cdef int w = self.ncols[oi]
        cdef int c, i, r, j, nv, n, p
        cdef double tv, pr
        cdef double* zc
        cdef double* tc
        cdef double* tb
        cdef double* pi[MAXP]
        cdef double* pj[MAXP]
        cdef double pc[MAXP]
        nv = ch[0].n
        if b >= 0:
            bias = self.vp[b]
            for r in range(nv):
                for j in range(w):
                    t[r * w + j] = z[r * w + j] + bias[j]
        else:
            memcpy(t, z, nv * w * sizeof(double))
        job = self.ufjobs[k]
        job[0](job[1], job[2])
        for c in range(1, nch):
            n = ch[c].n
            zc = z + ch[c].off * w
            tc = t + ch[c].off * w
            tb = t + (nv - n) * w
            if ch[c].kind == 1:
                for i in range(n * w):
                    tv = tb[i]
                    tc[i] = (1.0 - tv * tv) * zc[i]
            else:
                for p in range(ch[c].npairs):
                    pi[p] = z + (ch[self.auxi[ch[c].ppos + 3 * p]].off
                                 + ch[self.auxi[ch[c].ppos + 3 * p]].n - n) * w
                    pj[p] = z + (ch[self.auxi[ch[c].ppos + 3 * p + 1]].off
                                 + ch[self.auxi[ch[c].ppos + 3 * p + 1]].n - n) * w
                    pc[p] = self.auxd[self.auxi[ch[c].ppos + 3 * p + 2]]
                for i in range(n * w):
                    tv = tb[i]
                    pr = 0.0
                    for p in range(ch[c].npairs):
                        pr += pc[p] * pi[p][i] * pj[p][i]
                    tc[i] = (1.0 - tv * tv) * (zc[i] - 2.0 * tv * pr)

    cdef void _jet_tanh_bwd(self, int k):
        cdef int ap = self.apos[k]
        cdef ChInfo ch[MAXCH]
        cdef int nch
        self._load_table(ap, ch, &nch)
        cdef int oi = self.outn[k], a = self.ia[k], b = self.ib[k]
        cdef double* z = self.vp[a]
        cdef double* t = self.vp[oi]
        cdef double* go = self.gp[oi]
        cdef double* gz = self.gp[a] if self.ng[a] else NULL
        cdef double* gb = NULL
        cdef double* acc = self.scratch
        cdef int w = self.ncols[oi]
        cdef int c, i, r, j, nv, n, p
        cdef double tv, o_, pr, dv, m2to, coef
        cdef double* zc
        cdef double* gc
        cdef double* tb
        cdef double* ab
        cdef double* pi[MAXP]
        cdef double* pj[MAXP]
        cdef double* qi[MAXP]
        cdef double* qj[MAXP]
        cdef double pc[MAXP]
        if b >= 0 and self.ng[b]:
            gb = self.gp[b]
        nv = ch[0].n
        memcpy(acc, go, nv * w * sizeof(double))
        for c in range(1, nch):
            n = ch[c].n
            zc = z + ch[c].off * w
            gc = go + ch[c].off * w
            tb = t + (nv - n) * w
            ab = acc + (nv - n) * w
            if ch[c].kind == 1:
                for i in range(n * w):
                    ab[i] += gc[i] * (-2.0 * tb[i] * zc[i])
            else:
                for p in range(ch[c].npairs):
                    pi[p] = z + (ch[self.auxi[ch[c].ppos + 3 * p]].off
                                 + ch[self.auxi[ch[c].ppos + 3 * p]].n - n) * w
                    pj[p] = z + (ch[self.auxi[ch[c].ppos + 3 * p + 1]].off
                                 + ch[self.auxi[ch[c].ppos + 3 * p + 1]].n - n) * w
                    pc[p] = self.auxd[self.auxi[ch[c].ppos + 3 * p + 2]]
                for i in range(n * w):
                    tv = tb[i]
                    o_ = 1.0 - tv * tv
                    pr = 0.0
                    for p in range(ch[c].npairs):
                        pr += pc[p] * pi[p][i] * pj[p][i]
                    ab[i] += gc[i] * (-2.0 * tv * zc[i]
                                      - 2.0 * (o_ - 2.0 * tv * tv) * pr)
        if gz != NULL and gb != NULL:
            for r in range(nv):
                for j in range(w):
                    i = r * w + j
                    tv = t[i]
                    dv = acc[i] * (1.0 - tv * tv)
                    gz[i] += dv
                    gb[j] += dv
        elif gz != NULL:
            for i in range(nv * w):
                tv = t[i]
                gz[i] += acc[i] * (1.0 - tv * tv)
        elif gb != NULL:
            for r in range(nv):
                for j in range(w):
                    i = r * w + j
                    tv = t[i]
                    gb[j] += acc[i] * (1.0 - tv * tv)
        if gz == NULL:
            return
        for c in range(1, nch):
            n = ch[c].n
            gc = go + ch[c].off * w
            tb = t + (nv - n) * w
            zc = gz + ch[c].off * w
            for i in range(n * w):
                tv = tb[i]
                zc[i] += gc[i] * (1.0 - tv * tv)
            if ch[c].kind == 2:
                for p in range(ch[c].npairs):
                    pi[p] = z + (ch[self.auxi[ch[c].ppos + 3 * p]].off
                                 + ch[self.auxi[ch[c].ppos + 3 * p]].n - n) * w
                    pj[p] = z + (ch[self.auxi[ch[c].ppos + 3 * p + 1]].off
                                 + ch[self.auxi[ch[c].ppos + 3 * p + 1]].n - n) * w
                    qi[p] = gz + (ch[self.auxi[ch[c].ppos + 3 * p]].off
                                  + ch[self.auxi[ch[c].ppos + 3 * p]].n - n) * w
                    qj[p] = gz + (ch[self.auxi[ch[c].ppos + 3 * p + 1]].off
                                  + ch[self.auxi[ch[c].ppos + 3 * p + 1]].n - n) * w
                    pc[p] = self.auxd[self.auxi[ch[c].ppos + 3 * p + 2]]
                for i in range(n * w):
                    tv = tb[i]
                    m2to = gc[i] * (-2.0 * tv * (1.0 - tv * tv))
                    for p in range(ch[c].npairs):
                        coef = pc[p] * m2to
                        qi[p][i] += coef * pj[p][i]
                        qj[p][i] += coef * pi[p][i]

    cdef void _jet_mix_fwd(self, int k):
        cdef int ap = self.apos[k]
        cdef ChInfo ch[MAXCH]
        cdef int nch
        self._load_table(ap, ch, &nch)
        cdef int oi = self.outn[k]
        cdef double* u = self.vp[self.ia[k]]
        cdef double* v = self.vp[self.ib[k]]
        cdef double* t = self.vp[self.icn[k]]
        cdef double* m = self.vp[oi]
        cdef int w = self.ncols[oi]
        cdef int c, i, nv, n, p, base
        cdef double cross
        cdef double* uc
        cdef double* vc
        cdef double* tc
        cdef double* mc
        cdef double* ub
        cdef double* vb
        cdef double* tb
        cdef double* pu[MAXP]
        cdef double* pv[MAXP]
        cdef double* pt[MAXP]
        cdef double* qu[MAXP]
        cdef double* qv[MAXP]
        cdef double* qt[MAXP]
        cdef double pc[MAXP]
        nv = ch[0].n
        for i in range(nv * w):
            m[i] = u[i] + t[i] * (v[i] - u[i])
        for c in range(1, nch):
            n = ch[c].n
            base = ch[c].off * w
            uc, vc, tc, mc = u + base, v + base, t + base, m + base
            base = (nv - n) * w
            ub, vb, tb = u + base, v + base, t + base
            if ch[c].kind == 1:
                for i in range(n * w):
                    mc[i] = uc[i] + tc[i] * (vb[i] - ub[i]) + tb[i] * (vc[i] - uc[i])
            else:
                for p in range(ch[c].npairs):
                    base = (ch[self.auxi[ch[c].ppos + 3 * p]].off
                            + ch[self.auxi[ch[c].ppos + 3 * p]].n - n) * w
                    pu[p], pv[p], pt[p] = u + base, v + base, t + base
                    base = (ch[self.auxi[ch[c].ppos + 3 * p + 1]].off
                            + ch[self.auxi[ch[c].ppos + 3 * p + 1]].n - n) * w
                    qu[p], qv[p], qt[p] = u + base, v + base, t + base
                    pc[p] = self.auxd[self.auxi[ch[c].ppos + 3 * p + 2]]
                for i in range(n * w):
                    cross = 0.0
                    for p in range(ch[c].npairs):
                        cross += pc[p] * (pt[p][i] * (qv[p][i] - qu[p][i])
                                          + qt[p][i] * (pv[p][i] - pu[p][i]))
                    mc[i] = (uc[i] + tc[i] * (vb[i] - ub[i]) + cross
                             + tb[i] * (vc[i] - uc[i]))

    cdef void _jet_mix_bwd(self, int k):
        cdef int ap = self.apos[k]
        cdef ChInfo ch[MAXCH]
        cdef int nch
        self._load_table(ap, ch, &nch)
        cdef int oi = self.outn[k]
        cdef int an = self.ia[k], bn = self.ib[k], cn = self.icn[k]
        cdef double* u = self.vp[an]
        cdef double* v = self.vp[bn]
        cdef double* t = self.vp[cn]
        cdef double* go = self.gp[oi]
        cdef double* gu = self.gp[an] if self.ng[an] else NULL
        cdef double* gv = self.gp[bn] if self.ng[bn] else NULL
        cdef double* gt = self.gp[cn] if self.ng[cn] else NULL
        cdef int w = self.ncols[oi]
        cdef int c, i, nv, n, p, base
        cdef double gc, coef
        cdef double* uc
        cdef double* vc
        cdef double* tc
        cdef double* oc
        cdef double* ub
        cdef double* vb
        cdef double* tb
        cdef double* gut
        cdef double* gvt
        cdef double* gtt
        cdef double* guc
        cdef double* gvc
        cdef double* gtc
        cdef double* pu[MAXP]
        cdef double* pv[MAXP]
        cdef double* pt[MAXP]
        cdef double* pgu[MAXP]
        cdef double* pgv[MAXP]
        cdef double* pgt[MAXP]
        cdef double* qu[MAXP]
        cdef double* qv[MAXP]
        cdef double* qt[MAXP]
        cdef double* qgu[MAXP]
        cdef double* qgv[MAXP]
        cdef double* qgt[MAXP]
        cdef double pc[MAXP]
        nv = ch[0].n
        for i in range(nv * w):
            gc = go[i]
            if gu != NULL:
                gu[i] += gc * (1.0 - t[i])
            if gv != NULL:
                gv[i] += gc * t[i]
            if gt != NULL:
                gt[i] += gc * (v[i] - u[i])
        for c in range(1, nch):
            n = ch[c].n
            base = ch[c].off * w
            uc, vc, tc, oc = u + base, v + base, t + base, go + base
            guc = gu + base if gu != NULL else NULL
            gvc = gv + base if gv != NULL else NULL
            gtc = gt + base if gt != NULL else NULL
            base = (nv - n) * w
            ub, vb, tb = u + base, v + base, t + base
            gut = gu + base if gu != NULL else NULL
            gvt = gv + base if gv != NULL else NULL
            gtt = gt + base if gt != NULL else NULL
            for i in range(n * w):
                gc = oc[i]
                if gu != NULL:
                    guc[i] += gc * (1.0 - tb[i])
                    gut[i] -= gc * tc[i]
                if gv != NULL:
                    gvc[i] += gc * tb[i]
                    gvt[i] += gc * tc[i]
                if gt != NULL:
                    gtc[i] += gc * (vb[i] - ub[i])
                    gtt[i] += gc * (vc[i] - uc[i])
            if ch[c].kind == 2:
                for p in range(ch[c].npairs):
                    base = (ch[self.auxi[ch[c].ppos + 3 * p]].off
                            + ch[self.auxi[ch[c].ppos + 3 * p]].n - n) * w
                    pu[p], pv[p], pt[p] = u + base, v + base, t + base
                    pgu[p] = gu + base if gu != NULL else NULL
                    pgv[p] = gv + base if gv != NULL else NULL
                    pgt[p] = gt + base if gt != NULL else NULL
                    base = (ch[self.auxi[ch[c].ppos + 3 * p + 1]].off
                            + ch[self.auxi[ch[c].ppos + 3 * p + 1]].n - n) * w
                    qu[p], qv[p], qt[p] = u + base, v + base, t + base
                    qgu[p] = gu + base if gu != NULL else NULL
                    qgv[p] = gv + base if gv != NULL else NULL
                    qgt[p] = gt + base if gt != NULL else NULL
                    pc[p] = self.auxd[self.auxi[ch[c].ppos + 3 * p + 2]]
                for i in range(n * w):
                    gc = oc[i]
                    for p in range(ch[c].npairs):
                        coef = pc[p] * gc
                        if gt != NULL:
                            pgt[p][i] += coef * (qv[p][i] - qu[p][i])
                            qgt[p][i] += coef * (pv[p][i] - pu[p][i])
                        if gu != NULL:
                            qgu[p][i] -= coef * pt[p][i]
                            pgu[p][i] -= coef * qt[p][i]
                        if gv != NULL:
                            qgv[p][i] += coef * pt[p][i]
                            pgv[p][i] += coef * qt[p][i]
