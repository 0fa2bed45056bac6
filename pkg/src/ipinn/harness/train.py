"""The training loop: Adam phase, optional L-BFGS phase, metrics, outputs."""

from __future__ import annotations

import os
import time

import numpy as np

from ..autodiff import Graph
from ..errors import NumericError
from ..network import init_params, param_count, register_blocks_for_net
from ..optim import AdamState, LbfgsConfig, adam_step, lbfgs_minimize
from ..problems import get_problem
from ..weighting import (RAW_BLOCK, WeightState, attach_raw_block,
                         initial_lambda, lambdas, total_loss)
from .config import RunConfig
from .metrics import evaluate_run
from .records import (HistoryWriter, RunRecord, write_field_csv, write_record)

_BATCH_SEED_OFFSET = 1000003
_RESAMPLE_SEED_OFFSET = 2000003


def _history_row(it, total, losses, lams, terms):
    row = np.full(8, np.nan)
    row[0], row[1] = it, total
    slots = {"ic": (2, 5), "bc": (3, 6), "r": (4, 7)}
    for term, lam in zip(terms, lams):
        li, la = slots[term]
        row[li] = losses[term]
        row[la] = lam
    return row


def train(config: RunConfig) -> RunRecord:
    """Run one configuration end to end and write its outputs (if out_dir)."""
    t_start = time.perf_counter()
    problem = get_problem(config.problem, **config.overrides)
    gamma = problem.gamma_default if config.gamma is None else float(config.gamma)
    net = problem.network_def(config.layers, config.units, config.architecture)
    state = WeightState(config.scheme, problem.terms, gamma=gamma)
    params = attach_raw_block(init_params(net, seed=config.seed), state)
    batch = problem.sample_points(config.counts, seed=config.seed + _BATCH_SEED_OFFSET)

    g = Graph()
    blocks = register_blocks_for_net(g, net)
    raw_node = g.param(RAW_BLOCK, (1, len(state.terms))) if state.trainable else None
    loss_nodes = problem.build_losses(g, net, blocks, batch)
    total_node = total_loss(g, loss_nodes, state, raw_node)
    g.freeze(engine=config.engine)

    theta = params.vector.copy()
    n_net = param_count(net)
    raw_slice = slice(n_net, theta.size) if state.trainable else None

    notes = {}
    if config.scheme == "iaw" and gamma <= 1.0:
        notes["lambda_init"] = f"gamma <= 1: weights initialized at gamma/2 = {gamma / 2}"
    if config.problem == "cavity":
        notes["corner_offset"] = ("lid sampling keeps 1e-6 off the top corners; "
                                  "pressure gauged at the domain centre")

    out_dir = config.out_dir
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    writer = HistoryWriter(os.path.join(out_dir, "history.csv") if out_dir else None,
                           config.log_flush_every)
    history = []
    resample_rng = np.random.default_rng(config.seed + _RESAMPLE_SEED_OFFSET)

    def current_lambdas(vec):
        return lambdas(state, raw=vec[raw_slice]) if state.trainable \
            else lambdas(state)

    def eval_loss_grad(vec):
        g.set_params(vec)
        g.forward()
        tv = g.value_of(total_node)[0, 0]
        if not np.isfinite(tv):
            g.check_finite(total_node)  # raises NumericError with the node kind
        g.backward(total_node)
        grad = g.grad_vector()
        if not np.isfinite(grad).all():
            raise NumericError("non-finite gradient", node_kind=g.find_nonfinite_grad())
        return tv, grad

    adam = AdamState(lr=config.adam_lr)
    decay_rate = (problem.lr_decay_default if config.adam_decay_rate is None
                  else config.adam_decay_rate)
    if not config.adam_decay_every:
        decay_rate = 1.0
    notes["adam_lr_schedule"] = (
        f"lr {config.adam_lr:g}" + ("" if decay_rate == 1.0 else
                                    f" x{decay_rate:g} per {config.adam_decay_every} steps"))
    aborted = False
    abort_diag = None
    termination = "adam-completed"
    it = 0
    try:
        for it in range(config.adam_iters):
            if decay_rate != 1.0:
                adam.lr = config.adam_lr * decay_rate ** (it // config.adam_decay_every)
            if config.resample_every and it and it % config.resample_every == 0:
                fresh = problem.sample_points(
                    config.counts, seed=int(resample_rng.integers(2 ** 31)))
                problem.bind_batch(g, fresh)
            tv, grad = eval_loss_grad(theta)
            losses = {k: float(g.value_of(v)[0, 0]) for k, v in loss_nodes.items()}
            row = _history_row(it, tv, losses, current_lambdas(theta), state.terms)
            history.append(row)
            writer.add(row)
            adam_step(adam, theta, grad)
        if config.lbfgs:
            termination = _lbfgs_phase(config, g, eval_loss_grad, theta, history,
                                       writer, loss_nodes, current_lambdas, state)
    except NumericError as exc:
        aborted = True
        abort_diag = f"{exc} (node kind: {exc.node_kind})"
        termination = "aborted-nonfinite"
    writer.close()

    final_losses = {}
    rel = comps = res_rel = None
    if not aborted:
        try:
            tv, _ = eval_loss_grad(theta)
            final_losses = {k: float(g.value_of(v)[0, 0]) for k, v in loss_nodes.items()}
            final_losses["total"] = float(tv)
            ev = evaluate_run(problem, net, theta[:n_net], grid_n=config.eval_grid_n,
                              engine=config.engine,
                              reference_path=config.reference_path)
            rel, comps, res_rel = ev["rel_l2"], ev["components"], ev["residual_rel_l2"]
            if out_dir:
                write_field_csv(os.path.join(out_dir, "field.csv"),
                                ev["field_columns"], ev["field_arrays"])
        except NumericError as exc:  # the last step itself may have blown up
            aborted = True
            abort_diag = f"{exc} (node kind: {exc.node_kind})"
            termination = "aborted-nonfinite"
            final_losses = {}
            rel = comps = res_rel = None

    record = RunRecord(
        config=config.to_dict(),
        history=np.asarray(history) if history else np.empty((0, 8)),
        rel_l2=rel,
        rel_l2_components=comps or {},
        residual_rel_l2=res_rel,
        final_losses=final_losses,
        lambda_init=initial_lambda(config.scheme, gamma),
        param_count=theta.size,
        wall_time=time.perf_counter() - t_start,
        termination=termination,
        aborted=aborted,
        abort_diagnostic=abort_diag,
        engine=g.engine_name,
        seed=config.seed,
        notes=notes,
    )
    if out_dir:
        write_record(record, out_dir)
    return record


def _lbfgs_phase(config, graph, eval_loss_grad, theta, history, writer,
                 loss_nodes, current_lambdas, state):
    base_iter = config.adam_iters

    def logger(it, x, f, g, direction, alpha):
        losses = {k: float(graph.value_of(v)[0, 0]) for k, v in loss_nodes.items()}
        row = _history_row(base_iter + it, f, losses, current_lambdas(x), state.terms)
        history.append(row)
        writer.add(row)

    x, reason, _ = lbfgs_minimize(
        eval_loss_grad, theta,
        LbfgsConfig(max_iters=config.lbfgs_max_iters), callback=logger)
    theta[:] = x
    return f"lbfgs-{reason}"
