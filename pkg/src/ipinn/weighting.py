"""Loss aggregation schemes.

Three ways to combine the per-term losses L_m (m ranges over the terms a
problem actually has: initial, boundary, residual):

* fixed:  sum of lambda_m * L_m with constant lambdas.
* aw:     homoscedastic uncertainty weighting,
          sum of [L_m / (2 sigma_m^2) + (1/2) log sigma_m^2].
* iaw:    the capped variant,
          sum of [L_m / (sigma_m^2 + 1/gamma) + log(sigma_m^2 + 1/gamma)],
          so the effective weight 1 / (sigma_m^2 + 1/gamma) never exceeds
          gamma however small the uncertainty gets.

sigma_m^2 is parametrized as exp(s_m) with s_m trainable, which keeps it
positive without constraints. Raw values are chosen so every scheme starts
at weight 1 where feasible; for iaw with gamma <= 1 weight 1 is out of
reach and the start is gamma / 2 (recorded by the caller).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation

FIXED, AW, IAW = "fixed", "aw", "iaw"
RAW_BLOCK = "uncertainty_raw"


@dataclass
class LossBreakdown:
    """Per-term collocation losses; terms a problem lacks stay None."""

    L_ic: float | None = None
    L_bc: float | None = None
    L_r: float | None = None

    def present(self):
        return {k: v for k, v in
                (("ic", self.L_ic), ("bc", self.L_bc), ("r", self.L_r))
                if v is not None}


@dataclass
class WeightState:
    scheme: str
    terms: tuple                      # subset of ("ic", "bc", "r"), problem order
    gamma: float = 0.0                # iaw only
    raw: np.ndarray | None = None     # s_m, trainable (aw / iaw)
    fixed_lambdas: np.ndarray | None = None

    def __post_init__(self):
        if self.scheme not in (FIXED, AW, IAW):
            raise ContractViolation(f"unknown weighting scheme {self.scheme!r}")
        m = len(self.terms)
        if self.scheme == FIXED:
            if self.fixed_lambdas is None:
                self.fixed_lambdas = np.ones(m)
            self.fixed_lambdas = np.asarray(self.fixed_lambdas, dtype=np.float64)
        else:
            if self.scheme == IAW and not self.gamma > 0:
                raise ContractViolation("iaw requires gamma > 0")
            if self.raw is None:
                self.raw = initial_raw(self.scheme, self.gamma, m)
            self.raw = np.asarray(self.raw, dtype=np.float64)

    @property
    def trainable(self):
        return self.scheme in (AW, IAW)


def initial_raw(scheme, gamma, m):
    """Raw s_m giving lambda = 1 exactly; for iaw with gamma <= 1 this is
    infeasible and s = log(1/gamma) gives the closest start, lambda = gamma/2."""
    if scheme == AW:
        return np.full(m, np.log(0.5))
    if gamma > 1.0:
        return np.full(m, np.log(1.0 - 1.0 / gamma))
    return np.full(m, -np.log(gamma))


def initial_lambda(scheme, gamma):
    if scheme == IAW and gamma <= 1.0:
        return gamma / 2.0
    return 1.0


def lambdas(state: WeightState, raw=None) -> np.ndarray:
    """Effective per-term weights for the current (or supplied) raw values."""
    if state.scheme == FIXED:
        return state.fixed_lambdas.copy()
    s = state.raw if raw is None else np.asarray(raw, dtype=np.float64)
    sigma2 = np.exp(s)
    if state.scheme == AW:
        return 1.0 / (2.0 * sigma2)
    return 1.0 / (sigma2 + 1.0 / state.gamma)


def total_loss(g, losses: dict, state: WeightState, raw_node=None):
    """Scalar aggregate-loss node over per-term scalar loss nodes.

    ``losses`` maps term name -> (1,1) node, in the problem's term order.
    For trainable schemes ``raw_node`` is the (1, m) parameter block
    holding the s_m values; the returned expression is differentiable in
    the network parameters and in s_m.
    """
    if set(losses) != set(state.terms):
        raise ContractViolation(f"loss terms {set(losses)} != {set(state.terms)}")
    total = None

    def acc(x):
        nonlocal total
        total = x if total is None else total + x

    if state.scheme == FIXED:
        for lam, term in zip(state.fixed_lambdas, state.terms):
            acc(losses[term] * float(lam))
        return total
    if raw_node is None:
        raise ContractViolation("trainable scheme needs the raw parameter node")
    if raw_node.shape != (1, len(state.terms)):
        raise ContractViolation("raw node shape must be (1, n_terms)")
    for m, term in enumerate(state.terms):
        s = g.col(raw_node, m)
        if state.scheme == AW:
            # L/(2 sigma^2) + (1/2) log sigma^2 with sigma^2 = exp(s);
            # written via exp(-s) so huge s cannot overflow the weight
            acc(losses[term] * (g.exp(-s) * 0.5) + 0.5 * s)
        else:
            den = g.exp(s) + 1.0 / state.gamma
            acc(losses[term] / den + g.log(den))
    return total


def attach_raw_block(params, state: WeightState):
    """Extend a network ParameterSet with the trainable raw block."""
    if not state.trainable:
        return params
    return params.extended(RAW_BLOCK, state.raw)
