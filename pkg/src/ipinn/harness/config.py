"""Run configuration and the model-variant table."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from ..errors import ContractViolation

# model kind -> (architecture, weighting scheme)
MODEL_KINDS = {
    "pinn": ("plain", "fixed"),
    "ia-pinn": ("improved", "fixed"),
    "aw-pinn": ("plain", "aw"),
    "iaw-pinn": ("plain", "iaw"),
    "i-pinn": ("improved", "iaw"),
}

_ALIASES = {"ia": "ia-pinn", "aw": "aw-pinn", "iaw": "iaw-pinn",
            "ipinn": "i-pinn", "i_pinn": "i-pinn"}


def canonical_model(name: str) -> str:
    name = name.lower()
    name = _ALIASES.get(name, name)
    if name not in MODEL_KINDS:
        raise ContractViolation(
            f"unknown model {name!r}; choose from {sorted(MODEL_KINDS)}")
    return name


@dataclass
class RunConfig:
    problem: str = "helmholtz"
    model: str = "i-pinn"
    layers: int = 7
    units: int = 50
    gamma: float | None = None          # None -> problem default
    adam_iters: int = 40000
    adam_lr: float = 1e-3
    adam_decay_rate: float | None = None  # None -> problem default; 1.0 = constant
    adam_decay_every: int = 1000
    lbfgs: bool = False
    lbfgs_max_iters: int = 3000
    seed: int = 0
    out_dir: str | None = None
    overrides: dict = field(default_factory=dict)   # problem ctor args
    counts: dict = field(default_factory=dict)      # sampling overrides
    resample_every: int = 1                          # 0 = one fixed batch
    eval_grid_n: int = 100
    log_flush_every: int = 100
    engine: str = "auto"
    reference_path: str | None = None   # cavity: precomputed field CSV

    def __post_init__(self):
        self.model = canonical_model(self.model)

    @property
    def architecture(self):
        return MODEL_KINDS[self.model][0]

    @property
    def scheme(self):
        return MODEL_KINDS[self.model][1]

    def to_dict(self):
        d = asdict(self)
        d["architecture"] = self.architecture
        d["weighting"] = self.scheme
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d.pop("architecture", None)
        d.pop("weighting", None)
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))
