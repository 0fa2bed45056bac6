"""User-facing differentiation entry points."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractViolation, NumericError
from . import jets
from .graph import Graph, Node


@dataclass
class Jet2:
    """Network output with exact input derivatives at the query points.

    ``value`` has shape (n,), ``grad`` (n, d) and ``second`` maps each
    requested index pair to an (n,) array. Symmetric pairs share storage.
    """

    value: np.ndarray
    grad: np.ndarray
    second: dict


def _canon_pairs(pairs, dim):
    out = []
    for i, j in pairs:
        if not (0 <= i < dim and 0 <= j < dim):
            raise ContractViolation(f"derivative pair ({i},{j}) outside input dim {dim}")
        out.append((min(i, j), max(i, j)))
    return out


def grad_params(loss: Node, params) -> np.ndarray:
    """Reverse-mode gradient of a scalar loss node for every parameter slot."""
    if loss.shape != (1, 1):
        raise ContractViolation("loss must be a scalar expression")
    g = loss.graph
    if not g.frozen:
        g.freeze()
    vec = params.vector if hasattr(params, "vector") else np.asarray(params)
    g.set_params(vec)
    g.forward()
    g.check_finite(loss)
    g.backward(loss)
    grad = g.grad_vector()
    if not np.isfinite(grad).all():
        kind = g.find_nonfinite_grad() or "unknown"
        raise NumericError(f"non-finite gradient out of {kind!r} node", node_kind=kind)
    return grad


def grad_through_jet(residual_loss: Node, params) -> np.ndarray:
    """Gradient of a loss assembled from Jet2 fields; the reverse sweep runs
    through the recorded derivative propagation, so the dependence of the
    input derivatives on the parameters is included."""
    return grad_params(residual_loss, params)


def eval_jet2(net, params, x, pairs) -> Jet2:
    """Exact value / first / second input derivatives of a network output.

    Accepts a single point (d,) or a batch (n, d). Uses the composed
    per-channel propagation (independent of the fused training kernels).
    """
    from ..network import build_jet_parts
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    pts = x.reshape(1, -1) if single else x
    if pts.shape[1] != net.input_dim:
        raise ContractViolation(
            f"point dim {pts.shape[1]} != network input dim {net.input_dim}")
    if net.output_dim != 1:
        raise ContractViolation("eval_jet2 expects a single-output network")
    cpairs = _canon_pairs(pairs, net.input_dim)
    g = Graph()
    jp = build_jet_parts(g, net, pts, sorted(set(cpairs)))
    g.freeze()
    g.set_params(params.vector)
    g.forward()

    def val(node, zero_ok=True):
        if node is None:
            return np.zeros(pts.shape[0])
        return g.value_of(node)[:, 0].copy()

    value = val(jp.val)
    grad = np.stack([val(gr) for gr in jp.grads], axis=1)
    second = {}
    for want, key in zip(pairs, cpairs):
        second[tuple(want)] = val(jp.secs[key])
    if single:
        value = float(value[0])
        grad = grad[0]
        second = {k: float(v[0]) for k, v in second.items()}
    return Jet2(value=value, grad=grad, second=second)
