"""Optimizers: Adam for the long first phase, L-BFGS for polishing.

Both update the full flattened parameter vector, which includes the
uncertainty raws when the weighting scheme is trainable, so network and
weighting parameters advance jointly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, NumericError


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: np.ndarray | None = None
    v: np.ndarray | None = None


def adam_step(state: AdamState, params: np.ndarray, grads: np.ndarray):
    """One bias-corrected Adam update; mutates and returns (state, params)."""
    if grads.shape != params.shape:
        raise ContractViolation("gradient and parameter shapes differ")
    if not np.isfinite(grads).all():
        raise NumericError("non-finite gradient passed to adam_step")
    if state.m is None:
        state.m = np.zeros_like(params)
        state.v = np.zeros_like(params)
    state.t += 1
    state.m += (1.0 - state.beta1) * (grads - state.m)
    state.v += (1.0 - state.beta2) * (grads * grads - state.v)
    mhat = state.m / (1.0 - state.beta1 ** state.t)
    vhat = state.v / (1.0 - state.beta2 ** state.t)
    params -= state.lr * mhat / (np.sqrt(vhat) + state.eps)
    return state, params


@dataclass
class LbfgsConfig:
    memory: int = 50
    c1: float = 1e-4
    c2: float = 0.9
    gtol: float = 1e-9
    ftol: float = 1e-12
    max_iters: int = 3000
    max_ls: int = 25


GRAD_CONVERGED = "gradient-converged"
LOSS_CONVERGED = "loss-converged"
ITER_CAP = "iteration-cap"
LS_FAILED = "line-search-failed"


def _two_loop(grad, s_list, y_list):
    q = grad.copy()
    alphas = []
    for s, y in zip(reversed(s_list), reversed(y_list)):
        rho = 1.0 / (y @ s)
        a = rho * (s @ q)
        q -= a * y
        alphas.append((a, rho))
    if s_list:
        s, y = s_list[-1], y_list[-1]
        q *= (s @ y) / (y @ y)
    for (a, rho), s, y in zip(reversed(alphas), s_list, y_list):
        b = rho * (y @ q)
        q += (a - b) * s
    return -q


def _cubic_min(a, fa, da, b, fb, db):
    """Minimizer of the cubic through (a, fa, da), (b, fb, db); NaN-safe."""
    d1 = da + db - 3.0 * (fa - fb) / (a - b)
    disc = d1 * d1 - da * db
    if disc < 0.0:
        return 0.5 * (a + b)
    d2 = np.sqrt(disc) * np.sign(b - a)
    x = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2)
    if not np.isfinite(x):
        return 0.5 * (a + b)
    lo, hi = min(a, b), max(a, b)
    margin = 0.1 * (hi - lo)
    return min(max(x, lo + margin), hi - margin)


def _zoom(phi, alo, flo, dlo, ahi, fhi, dhi, f0, d0, c1, c2, max_ls):
    for _ in range(max_ls):
        a = _cubic_min(alo, flo, dlo, ahi, fhi, dhi)
        f, d = phi(a)
        if f > f0 + c1 * a * d0 or f >= flo:
            ahi, fhi, dhi = a, f, d
        else:
            if abs(d) <= -c2 * d0:
                return a, f, d
            if d * (ahi - alo) >= 0.0:
                ahi, fhi, dhi = alo, flo, dlo
            alo, flo, dlo = a, f, d
    return None


def _strong_wolfe(phi, f0, d0, c1, c2, max_ls, a1=1.0):
    """Line search returning (alpha, f, dphi) satisfying the strong Wolfe
    conditions, or None (Nocedal & Wright alg. 3.5/3.6 with cubic zoom)."""
    aprev, fprev, dprev = 0.0, f0, d0
    a = a1
    for it in range(max_ls):
        f, d = phi(a)
        if not np.isfinite(f):
            a = 0.5 * (aprev + a)
            continue
        if f > f0 + c1 * a * d0 or (it > 0 and f >= fprev):
            return _zoom(phi, aprev, fprev, dprev, a, f, d, f0, d0, c1, c2, max_ls)
        if abs(d) <= -c2 * d0:
            return a, f, d
        if d >= 0.0:
            return _zoom(phi, a, f, d, aprev, fprev, dprev, f0, d0, c1, c2, max_ls)
        aprev, fprev, dprev = a, f, d
        a *= 2.0
    return None


def lbfgs_minimize(fun_grad, x0, config: LbfgsConfig | None = None, callback=None):
    """Quasi-Newton minimization with two-loop recursion and strong Wolfe steps.

    ``fun_grad(x) -> (f, g)``. Returns (x, reason, info). Line-search failure
    terminates with its own reason instead of raising. memory = 0 degrades
    to steepest descent with the same line search.
    """
    cfg = config or LbfgsConfig()
    x = np.asarray(x0, dtype=np.float64).copy()
    f, g = fun_grad(x)
    nev = 1
    s_list, y_list = [], []
    reason = ITER_CAP
    it = 0
    for it in range(cfg.max_iters):
        gnorm = np.linalg.norm(g)
        if gnorm < cfg.gtol:
            reason = GRAD_CONVERGED
            break
        d = _two_loop(g, s_list, y_list)
        d0 = d @ g
        if d0 >= 0.0:  # stale curvature: restart from steepest descent
            s_list, y_list = [], []
            d = -g
            d0 = d @ g

        gnew_holder = {}

        def phi(alpha):
            nonlocal nev
            fv, gv = fun_grad(x + alpha * d)
            nev += 1
            gnew_holder["g"] = gv
            return fv, gv @ d

        hit = _strong_wolfe(phi, f, d0, cfg.c1, cfg.c2, cfg.max_ls,
                            a1=min(1.0, 100.0 / max(gnorm, 1.0)) if it == 0 else 1.0)
        if hit is None:
            reason = LS_FAILED
            break
        alpha, fnew, _ = hit
        gnew = gnew_holder["g"]
        step = alpha * d
        yk = gnew - g
        if step @ yk > 1e-10:
            s_list.append(step)
            y_list.append(yk)
            if len(s_list) > max(cfg.memory, 0):
                s_list.pop(0)
                y_list.pop(0)
        x = x + step
        df = f - fnew
        if callback is not None:
            callback(it=it, x=x, f=fnew, g=gnew, direction=d, alpha=alpha)
        f, g = fnew, gnew
        if df <= cfg.ftol * max(abs(f), 1.0):
            reason = LOSS_CONVERGED
            break
    info = {"iterations": it, "f": f, "gnorm": float(np.linalg.norm(g)),
            "evaluations": nev}
    return x, reason, info
