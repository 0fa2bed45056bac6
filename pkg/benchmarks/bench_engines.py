"""Compare the compiled tape executor against the pure-NumPy fallback.

Times forward+backward replays of a realistic training graph (improved
architecture, 512 boundary + 128 interior points, Laplacian jet channels).

    python benchmarks/bench_engines.py [--layers 7] [--units 50] [--iters 200]
"""

import argparse
import time

import numpy as np

from ipinn import network as N
from ipinn.autodiff import HAVE_COMPILED, Graph, jets


def build(engine, layers, units, kind="improved", n_bc=512, n_r=128):
    rng = np.random.default_rng(42)
    net = N.NetworkDef(kind, 2, 1, layers, units)
    ps = N.init_params(net, seed=3)
    pts = rng.uniform(-1, 1, (n_bc + n_r, 2))
    q = rng.normal(size=(n_r, 1))
    g = Graph()
    blocks = N.register_blocks_for_net(g, net)
    table = jets.residual_table(n_bc + n_r, n_r, 2, [(0, 0, 1.0), (1, 1, 1.0)])
    out = N.NetOutput(g, net, blocks, jets.input_stack(g, table, pts))
    r = out.chan(3) + out.val_rows(n_bc, n_bc + n_r) - g.const(q)
    loss = (g.mean(g.square(r))
            + g.mean(g.square(out.val_rows(0, n_bc))))
    g.freeze(engine=engine)
    g.set_params(ps.vector)
    return g, loss


def timeit(g, loss, iters):
    for _ in range(5):
        g.forward()
        g.backward(loss)
    t0 = time.perf_counter()
    for _ in range(iters):
        g.forward()
        g.backward(loss)
    return (time.perf_counter() - t0) / iters


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--layers", type=int, default=7)
    ap.add_argument("--units", type=int, default=50)
    ap.add_argument("--iters", type=int, default=200)
    args = ap.parse_args()

    engines = ["python"] + (["compiled"] if HAVE_COMPILED else [])
    if not HAVE_COMPILED:
        print("note: compiled kernel not built; timing the fallback only")
    results = {}
    for kind in ("plain", "improved"):
        for engine in engines:
            g, loss = build(engine, args.layers, args.units, kind)
            dt = timeit(g, loss, args.iters)
            results[(kind, engine)] = dt
            print(f"{kind:9s} {engine:9s} {dt * 1e3:7.2f} ms/iter "
                  f"({dt * 40000 / 60:5.1f} min per 40k run)")
    if HAVE_COMPILED:
        for kind in ("plain", "improved"):
            speedup = results[(kind, "python")] / results[(kind, "compiled")]
            print(f"{kind}: compiled is {speedup:.2f}x the fallback")

    # the two engines must agree on values and gradients
    grads = {}
    for engine in engines:
        g, loss = build(engine, args.layers, args.units)
        g.forward()
        g.backward(loss)
        grads[engine] = (g.value_of(loss)[0, 0], g.grad_vector())
    if len(engines) == 2:
        dv = abs(grads["python"][0] - grads["compiled"][0])
        dg = np.abs(grads["python"][1] - grads["compiled"][1]).max()
        print(f"engine agreement: |dloss| = {dv:.2e}, max |dgrad| = {dg:.2e}")


if __name__ == "__main__":
    main()
