from .base import EdgeClause, PointBatch, ProblemSpec, loss_breakdown
from .cavity import Cavity, cavity_residual
from .helmholtz import Helmholtz, helmholtz_exact, helmholtz_forcing
from .kleingordon import KleinGordon, kg_exact, kg_forcing

_REGISTRY = {"helmholtz": Helmholtz, "kg": KleinGordon, "cavity": Cavity}


def get_problem(name, **overrides) -> ProblemSpec:
    try:
        cls = _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; have {sorted(_REGISTRY)}") from None
    return cls(**overrides)


def problem_names():
    return sorted(_REGISTRY)


__all__ = [
    "Cavity", "EdgeClause", "Helmholtz", "KleinGordon", "PointBatch",
    "ProblemSpec", "cavity_residual", "get_problem", "helmholtz_exact",
    "helmholtz_forcing", "kg_exact", "kg_forcing", "loss_breakdown",
    "problem_names",
]
