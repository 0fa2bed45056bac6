"""ipinn: PINN training with an improved MLP and capped adaptive loss weights."""

__version__ = "0.1.0"

from .autodiff import HAVE_COMPILED, default_engine

__all__ = ["HAVE_COMPILED", "default_engine", "__version__"]
