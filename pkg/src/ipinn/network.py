"""Network definitions, initialization, parameter flattening and forwards.

Two architectures share the parameter layout logic: the plain tanh MLP and
the improved variant that encodes the input twice (U, V) and blends every
hidden state h into (1 - h) * U + h * V. The final layer is affine in both
cases and the first hidden layer consumes the raw input.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .autodiff import Graph, jets
from .autodiff.jets import JetParts, JetStack
from .errors import ContractViolation

PLAIN = "plain"
IMPROVED = "improved"


@dataclass(frozen=True)
class NetworkDef:
    kind: str
    input_dim: int
    output_dim: int
    hidden_layers: int
    units: int
    activation: str = "tanh"

    def __post_init__(self):
        if self.kind not in (PLAIN, IMPROVED):
            raise ContractViolation(f"unknown network kind {self.kind!r}")
        if self.hidden_layers < 1 or self.units < 1:
            raise ContractViolation("need hidden_layers >= 1 and units >= 1")
        if self.activation != "tanh":
            raise ContractViolation("only tanh activation is supported")


def layer_blocks(net: NetworkDef):
    """Ordered (name, shape) parameter blocks."""
    d, u, o = net.input_dim, net.units, net.output_dim
    blocks = []
    if net.kind == IMPROVED:
        blocks += [("enc_u_w", (d, u)), ("enc_u_b", (1, u)),
                   ("enc_v_w", (d, u)), ("enc_v_b", (1, u))]
    fan_in = d
    for layer in range(net.hidden_layers):
        blocks += [(f"w{layer}", (fan_in, u)), (f"b{layer}", (1, u))]
        fan_in = u
    blocks += [("out_w", (u, o)), ("out_b", (1, o))]
    return blocks


def param_count(net: NetworkDef):
    return sum(r * c for _, (r, c) in layer_blocks(net))


@dataclass
class ParameterSet:
    """Flat trainable vector plus a name -> (offset, shape) layout map."""

    vector: np.ndarray
    layout: dict

    def __post_init__(self):
        self.vector = np.ascontiguousarray(self.vector, dtype=np.float64)
        run = 0
        for _, (off, shape) in self._ordered():
            if off != run:
                raise ContractViolation("layout has a gap or overlap")
            run += shape[0] * shape[1]
        if run != self.vector.size:
            raise ContractViolation("layout does not partition the vector")

    def _ordered(self):
        return sorted(self.layout.items(), key=lambda kv: kv[1][0])

    def block(self, name):
        off, (r, c) = self.layout[name]
        return self.vector[off:off + r * c].reshape(r, c)

    def copy(self):
        return ParameterSet(self.vector.copy(), dict(self.layout))

    def extended(self, name, values):
        """New ParameterSet with an extra block appended."""
        values = np.asarray(values, dtype=np.float64).reshape(1, -1)
        layout = dict(self.layout)
        layout[name] = (self.vector.size, values.shape)
        return ParameterSet(np.concatenate([self.vector, values.ravel()]), layout)

    def to_json(self, path):
        doc = {"layout": {k: [off, list(shape)] for k, (off, shape) in self.layout.items()},
               "vector": self.vector.tolist()}
        with open(path, "w") as fh:
            json.dump(doc, fh)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            doc = json.load(fh)
        layout = {k: (off, tuple(shape)) for k, (off, shape) in doc["layout"].items()}
        return cls(np.asarray(doc["vector"], dtype=np.float64), layout)


def init_params(net: NetworkDef, seed: int) -> ParameterSet:
    """Glorot-normal weights (std = sqrt(2 / (fan_in + fan_out))), zero biases."""
    rng = np.random.default_rng(seed)
    blocks = layer_blocks(net)
    vec = np.empty(sum(r * c for _, (r, c) in blocks))
    layout = {}
    off = 0
    for name, (r, c) in blocks:
        size = r * c
        if name.endswith("_b") or name.startswith("b"):
            vec[off:off + size] = 0.0
        else:
            std = np.sqrt(2.0 / (r + c))
            vec[off:off + size] = rng.normal(0.0, std, size)
        layout[name] = (off, (r, c))
        off += size
    return ParameterSet(vec, layout)


# ------------------------------------------------------------ graph builders

def register_blocks(g: Graph, params: ParameterSet):
    """Declare every layout block as a graph parameter, in layout order."""
    nodes = {}
    for name, (off, shape) in params._ordered():
        nodes[name] = g.param(name, shape)
    return nodes


def build_stack_forward(g: Graph, net: NetworkDef, blocks, x: JetStack) -> JetStack:
    """Fused-route forward up to (and including) the affine output layer.

    Returns the output stack (rows laid out by x's channel table, width =
    output_dim); the value rows still need the output bias, which the
    caller applies to its value view so derivative rows stay exact.
    """
    h = x
    if net.kind == IMPROVED:
        u_enc = jets.stack_tanh(jets.stack_linear(x, blocks["enc_u_w"]), blocks["enc_u_b"])
        v_enc = jets.stack_tanh(jets.stack_linear(x, blocks["enc_v_w"]), blocks["enc_v_b"])
    for layer in range(net.hidden_layers):
        h = jets.stack_tanh(jets.stack_linear(h, blocks[f"w{layer}"]), blocks[f"b{layer}"])
        if net.kind == IMPROVED:
            h = jets.stack_mix(u_enc, v_enc, h)
    return jets.stack_linear(h, blocks["out_w"])


class NetOutput:
    """Output stack plus convenience taps; val is the biased value block."""

    def __init__(self, g: Graph, net: NetworkDef, blocks, x: JetStack):
        self.stack = build_stack_forward(g, net, blocks, x)
        self.table = x.table
        n_val = self.table.counts[0]
        self.val = g.rows(self.stack.node, 0, n_val) + blocks["out_b"]

    def val_rows(self, r0, r1):
        return self.val.graph.rows(self.val, r0, r1)

    def chan(self, c):
        return self.stack.chan(c)

    def chan_tail(self, c, n):
        return self.stack.chan_tail(c, n)

    def chan_head(self, c, n):
        return self.stack.chan_head(c, n)


def build_jet_parts(g: Graph, net: NetworkDef, points: np.ndarray, pairs) -> JetParts:
    """Composed-route forward returning per-channel nodes (single output)."""
    blocks = register_blocks_for_net(g, net)
    x = jets.jet_input(g, points, pairs)
    h = x
    if net.kind == IMPROVED:
        u_enc = jets.jet_tanh(jets.jet_linear(x, blocks["enc_u_w"], blocks["enc_u_b"]))
        v_enc = jets.jet_tanh(jets.jet_linear(x, blocks["enc_v_w"], blocks["enc_v_b"]))
    for layer in range(net.hidden_layers):
        h = jets.jet_tanh(jets.jet_linear(h, blocks[f"w{layer}"], blocks[f"b{layer}"]))
        if net.kind == IMPROVED:
            h = jets.jet_mix_parts(u_enc, v_enc, h)
    return jets.jet_linear(h, blocks["out_w"], blocks["out_b"])


def register_blocks_for_net(g: Graph, net: NetworkDef):
    nodes = {}
    for name, shape in layer_blocks(net):
        nodes[name] = g.param(name, shape)
    return nodes


def _forward(net: NetworkDef, params: ParameterSet, x):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    pts = x.reshape(1, -1) if single else x
    if pts.shape[1] != net.input_dim:
        raise ContractViolation(
            f"input dim {pts.shape[1]} != network input dim {net.input_dim}")
    g = Graph()
    blocks = register_blocks_for_net(g, net)
    table = jets.value_table(pts.shape[0])
    out = NetOutput(g, net, blocks, jets.input_stack(g, table, pts))
    g.freeze()
    g.set_params(params.vector)
    g.forward()
    res = g.value_of(out.val).copy()
    return res[0] if single else res


def forward_plain(net: NetworkDef, params: ParameterSet, x):
    if net.kind != PLAIN:
        raise ContractViolation("forward_plain expects a plain network")
    return _forward(net, params, x)


def forward_improved(net: NetworkDef, params: ParameterSet, x):
    if net.kind != IMPROVED:
        raise ContractViolation("forward_improved expects an improved network")
    return _forward(net, params, x)


def forward(net: NetworkDef, params: ParameterSet, x):
    return _forward(net, params, x)
