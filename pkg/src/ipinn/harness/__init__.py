from .config import MODEL_KINDS, RunConfig, canonical_model
from .matrix import MatrixConfig, load_summary, run_matrix
from .metrics import (cavity_reference, evaluate_run, predict_residual_lhs,
                      predict_values, relative_l2)
from .records import HISTORY_COLUMNS, RunRecord, load_history
from .train import train

__all__ = [
    "HISTORY_COLUMNS", "MODEL_KINDS", "MatrixConfig", "RunConfig", "RunRecord",
    "canonical_model", "cavity_reference", "evaluate_run", "load_history",
    "load_summary", "predict_residual_lhs", "predict_values", "relative_l2",
    "run_matrix", "train",
]
