"""Network definitions, initialization, forwards vs a literal re-implementation."""

import numpy as np
import pytest

from ipinn import network as N
from ipinn.errors import ContractViolation

from conftest import assert_grad_close, central_diff


def reference_forward(net, params, x):
    """Independent NumPy transcription of the two architectures.

    Plain: affine + tanh chain, affine head. Improved: two tanh encoders
    U, V and per-layer blending (1 - a) * U + a * V, written literally."""
    p = params.block
    a = x
    if net.kind == "improved":
        u = np.tanh(x @ p("enc_u_w") + p("enc_u_b"))
        v = np.tanh(x @ p("enc_v_w") + p("enc_v_b"))
    for layer in range(net.hidden_layers):
        a = np.tanh(a @ p(f"w{layer}") + p(f"b{layer}"))
        if net.kind == "improved":
            a = (1.0 - a) * u + a * v
    return a @ p("out_w") + p("out_b")


def closed_form_count(kind, d, o, layers, units):
    n = d * units + units + (layers - 1) * (units * units + units)
    n += units * o + o
    if kind == "improved":
        n += 2 * (d * units + units)
    return n


@pytest.mark.parametrize("kind", ["plain", "improved"])
@pytest.mark.parametrize("layers", [3, 5, 7])
@pytest.mark.parametrize("units", [30, 50, 70, 90])
def test_param_count_formula(kind, layers, units):
    net = N.NetworkDef(kind, 2, 1, layers, units)
    assert N.param_count(net) == closed_form_count(kind, 2, 1, layers, units)


def test_param_count_hand_value():
    # 2 -> [50 x 7] -> 1 plain: 2*50+50 + 6*(50*50+50) + 50*1+1
    net = N.NetworkDef("plain", 2, 1, 7, 50)
    assert N.param_count(net) == 2 * 50 + 50 + 6 * (50 * 50 + 50) + 50 + 1


def test_init_deterministic_and_seed_sensitive():
    net = N.NetworkDef("improved", 2, 1, 3, 20)
    a = N.init_params(net, seed=42)
    b = N.init_params(net, seed=42)
    c = N.init_params(net, seed=43)
    assert np.array_equal(a.vector, b.vector)
    assert not np.array_equal(a.vector, c.vector)


def test_glorot_std_within_ten_percent():
    net = N.NetworkDef("plain", 50, 50, 2, 50)  # w1 block is 50 x 50
    samples = np.concatenate([
        N.init_params(net, seed=s).block("w1").ravel() for s in range(4)])
    assert samples.size == 10000
    target = np.sqrt(2.0 / 100.0)
    assert abs(samples.std() - target) <= 0.1 * target
    for s in range(2):
        assert np.all(N.init_params(net, seed=s).block("b0") == 0.0)


@pytest.mark.parametrize("kind", ["plain", "improved"])
def test_zero_params_zero_output(kind):
    net = N.NetworkDef(kind, 2, 1, 3, 10)
    ps = N.init_params(net, seed=0)
    ps.vector[:] = 0.0
    x = np.random.default_rng(0).uniform(-1, 1, (9, 2))
    out = N.forward(net, ps, x)
    assert np.all(out == 0.0)


def test_single_unit_identity_case():
    net = N.NetworkDef("plain", 1, 1, 1, 1)
    ps = N.init_params(net, seed=0)
    ps.vector[:] = 0.0
    ps.block("w0")[:] = 1.0
    ps.block("out_w")[:] = 1.0
    assert N.forward_plain(net, ps, np.array([0.0]))[0] == 0.0
    assert N.forward_plain(net, ps, np.array([0.5]))[0] == pytest.approx(np.tanh(0.5))


@pytest.mark.parametrize("kind", ["plain", "improved"])
def test_forward_matches_reference_reimplementation(kind):
    net = N.NetworkDef(kind, 2, 3, 4, 13)
    ps = N.init_params(net, seed=5)
    x = np.random.default_rng(2).uniform(-1, 1, (40, 2))
    mine = N.forward(net, ps, x)
    ref = reference_forward(net, ps, x)
    assert np.abs(mine - ref).max() <= 1e-12


def test_forward_kind_contracts():
    plain = N.NetworkDef("plain", 2, 1, 1, 4)
    improved = N.NetworkDef("improved", 2, 1, 1, 4)
    ps_p = N.init_params(plain, 0)
    ps_i = N.init_params(improved, 0)
    with pytest.raises(ContractViolation):
        N.forward_plain(improved, ps_i, np.zeros(2))
    with pytest.raises(ContractViolation):
        N.forward_improved(plain, ps_p, np.zeros(2))
    with pytest.raises(ContractViolation):
        N.forward_plain(plain, ps_p, np.zeros(3))


def test_identical_encoders_make_hidden_weights_irrelevant():
    """With U == V every blended state is exactly U, so the output is
    invariant to the hidden-layer weights (bitwise)."""
    net = N.NetworkDef("improved", 2, 1, 3, 8)
    rng = np.random.default_rng(7)
    x = rng.uniform(-1, 1, (11, 2))

    def with_hidden(seed):
        ps = N.init_params(net, seed=3)
        for name in ("enc_v_w", "enc_v_b"):
            ps.block(name)[:] = ps.block(name.replace("_v_", "_u_"))
        hid = np.random.default_rng(seed)
        for layer in range(net.hidden_layers):
            ps.block(f"w{layer}")[:] = hid.normal(size=ps.block(f"w{layer}").shape)
            ps.block(f"b{layer}")[:] = hid.normal(size=ps.block(f"b{layer}").shape)
        return N.forward(net, ps, x)

    np.testing.assert_array_equal(with_hidden(1), with_hidden(2))


def test_parameter_continuity_fd_vs_autodiff():
    """Output responds smoothly to each parameter: FD of the mean output
    agrees with the reverse-mode gradient."""
    from ipinn.autodiff import Graph, grad_params, jets
    for kind in ("plain", "improved"):
        net = N.NetworkDef(kind, 2, 1, 2, 5)
        ps = N.init_params(net, seed=1)
        pts = np.random.default_rng(3).uniform(-1, 1, (6, 2))
        g = Graph()
        blocks = N.register_blocks_for_net(g, net)
        out = N.NetOutput(g, net, blocks, jets.input_stack(
            g, jets.value_table(6), pts))
        loss = g.mean(out.val)
        ad = grad_params(loss, ps)

        def f(t):
            g.set_params(t)
            g.forward()
            return g.value_of(loss)[0, 0]

        assert_grad_close(ad, central_diff(f, ps.vector, 1e-6), rtol=1e-5)


def test_parameterset_layout_validation():
    with pytest.raises(ContractViolation):
        N.ParameterSet(np.zeros(5), {"a": (0, (2, 2))})
    with pytest.raises(ContractViolation):
        N.ParameterSet(np.zeros(8), {"a": (0, (2, 2)), "b": (5, (1, 3))})


def test_parameterset_json_roundtrip(tmp_path):
    net = N.NetworkDef("improved", 2, 1, 2, 6)
    ps = N.init_params(net, seed=9)
    path = tmp_path / "ckpt.json"
    ps.to_json(path)
    back = N.ParameterSet.from_json(path)
    assert np.array_equal(ps.vector, back.vector)
    assert ps.layout == back.layout


def test_networkdef_validation():
    with pytest.raises(ContractViolation):
        N.NetworkDef("fancy", 2, 1, 3, 10)
    with pytest.raises(ContractViolation):
        N.NetworkDef("plain", 2, 1, 0, 10)
    with pytest.raises(ContractViolation):
        N.NetworkDef("plain", 2, 1, 3, 10, activation="relu")
