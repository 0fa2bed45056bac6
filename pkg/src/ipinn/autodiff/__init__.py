from .graph import (ChannelTable, Graph, Node, ADD, SUB, MUL, DIV, NEG, POWI,
                    SIN, COS, TANH, EXP, LOG, SQUARE, MEAN, MATMUL, COL,
                    JET_TANH, JET_MIX, OP_NAMES)
from .engine import HAVE_COMPILED, default_engine
from .api import Jet2, eval_jet2, grad_params, grad_through_jet
from . import jets

__all__ = [
    "ChannelTable", "Graph", "Node", "Jet2", "jets",
    "eval_jet2", "grad_params", "grad_through_jet",
    "HAVE_COMPILED", "default_engine", "OP_NAMES",
]
