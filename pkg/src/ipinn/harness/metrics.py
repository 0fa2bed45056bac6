"""Evaluation-grid metrics."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..autodiff import Graph, jets
from ..errors import ContractViolation
from ..network import NetOutput, register_blocks_for_net
from ..problems import Cavity, ProblemSpec
from .. import refcavity


def relative_l2(pred, true):
    """||pred - true||_2 / ||true||_2 over flattened fields."""
    pred = np.asarray(pred, dtype=np.float64).ravel()
    true = np.asarray(true, dtype=np.float64).ravel()
    if pred.shape != true.shape:
        raise ContractViolation("field shapes differ")
    denom = np.linalg.norm(true)
    if denom == 0.0:
        raise ContractViolation("true field has zero norm")
    return float(np.linalg.norm(pred - true) / denom)


def predict_values(problem: ProblemSpec, net, theta_net, pts, engine="auto"):
    """Network values at arbitrary points (value-only stacked forward)."""
    g = Graph()
    blocks = register_blocks_for_net(g, net)
    out = NetOutput(g, net, blocks, jets.input_stack(
        g, jets.value_table(pts.shape[0]), pts))
    g.freeze(engine=engine)
    g.set_params(theta_net)
    g.forward()
    return g.value_of(out.val).copy()


def predict_residual_lhs(problem: ProblemSpec, net, theta_net, pts, engine="auto"):
    """Differential-operator output of the network on the points, for the
    residual-field error (None for problems without a forcing target)."""
    if problem.name == "cavity":
        return None
    m = pts.shape[0]
    g = Graph()
    blocks = register_blocks_for_net(g, net)
    if problem.name == "helmholtz":
        table = jets.residual_table(m, m, 2, [(0, 0, 1.0), (1, 1, 1.0)])
        out = NetOutput(g, net, blocks, jets.input_stack(g, table, pts))
        lhs = out.chan(3) + out.val_rows(0, m) * problem.k ** 2
    elif problem.name == "kg":
        table = jets.residual_table(m, m, 2, [(1, 1, 1.0), (0, 0, problem.alpha)])
        out = NetOutput(g, net, blocks, jets.input_stack(g, table, pts))
        u = out.val_rows(0, m)
        lhs = out.chan(3) + (u ** problem.k) * problem.gamma_c
        if problem.beta != 0.0:
            lhs = lhs + u * problem.beta
    else:
        return None
    g.freeze(engine=engine)
    g.set_params(theta_net)
    g.forward()
    return g.value_of(lhs)[:, 0].copy()


@lru_cache(maxsize=4)
def _solved_reference(re: float, n: int = 129):
    return refcavity.solve_cavity_fd(re=re, n=n, tol=1e-7, omega=1.9)


def cavity_reference(re=100.0, path=None) -> refcavity.ReferenceField:
    if path is not None:
        return refcavity.load_reference(path)
    return _solved_reference(float(re))


def evaluate_run(problem: ProblemSpec, net, theta_net, grid_n=100,
                 engine="auto", reference_path=None):
    """Final grid metrics: relative errors, field table for field.csv."""
    pts = problem.eval_grid(grid_n)
    pred = predict_values(problem, net, theta_net, pts, engine=engine)
    out = {}
    if isinstance(problem, Cavity):
        ref = cavity_reference(problem.re, reference_path).interp(pts)
        out["rel_l2"] = relative_l2(pred[:, :2], ref)
        out["components"] = {
            "u": relative_l2(pred[:, 0], ref[:, 0]),
            "v": relative_l2(pred[:, 1], ref[:, 1]),
        }
        mag_p = np.hypot(pred[:, 0], pred[:, 1])
        mag_r = np.hypot(ref[:, 0], ref[:, 1])
        abs_err = np.hypot(pred[:, 0] - ref[:, 0], pred[:, 1] - ref[:, 1])
        out["residual_rel_l2"] = None
        out["field_columns"] = ["x", "y", "u_exact", "u_pred", "v_exact",
                                "v_pred", "vel_mag_exact", "vel_mag_pred",
                                "abs_err"]
        out["field_arrays"] = [pts[:, 0], pts[:, 1], ref[:, 0], pred[:, 0],
                               ref[:, 1], pred[:, 1], mag_r, mag_p, abs_err]
        return out
    exact = problem.exact(pts)
    out["rel_l2"] = relative_l2(pred[:, 0], exact[:, 0])
    out["components"] = {"u": out["rel_l2"]}
    lhs = predict_residual_lhs(problem, net, theta_net, pts, engine=engine)
    out["residual_rel_l2"] = (None if lhs is None
                              else relative_l2(lhs, problem.forcing(pts)[:, 0]))
    names = ["x", "y"] if problem.name != "kg" else ["x", "t"]
    out["field_columns"] = names + ["u_exact", "u_pred", "abs_err"]
    out["field_arrays"] = [pts[:, 0], pts[:, 1], exact[:, 0], pred[:, 0],
                           np.abs(pred[:, 0] - exact[:, 0])]
    return out
