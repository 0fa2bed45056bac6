"""Run results and their on-disk formats.

Per run directory: record.json (everything but the bulky history),
history.csv (one row per logged iteration) and field.csv (evaluation-grid
fields). Matrix runs add a summary.csv at the matrix root.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

HISTORY_COLUMNS = ["iter", "total", "L_ic", "L_bc", "L_r",
                   "lam_ic", "lam_bc", "lam_r"]


@dataclass
class RunRecord:
    config: dict
    history: np.ndarray                 # (rows, 8) per HISTORY_COLUMNS
    rel_l2: float | None = None         # primary field error
    rel_l2_components: dict = field(default_factory=dict)
    residual_rel_l2: float | None = None
    final_losses: dict = field(default_factory=dict)
    lambda_init: float = 1.0
    param_count: int = 0
    wall_time: float = 0.0
    termination: str = "adam-completed"
    aborted: bool = False
    abort_diagnostic: str | None = None
    engine: str = ""
    seed: int = 0
    notes: dict = field(default_factory=dict)

    def equivalent(self, other) -> bool:
        """Determinism comparison: every field except timing."""
        return (self.config == other.config
                and np.array_equal(self.history, other.history, equal_nan=True)
                and self.rel_l2 == other.rel_l2
                and self.rel_l2_components == other.rel_l2_components
                and self.residual_rel_l2 == other.residual_rel_l2
                and self.final_losses == other.final_losses
                and self.termination == other.termination
                and self.aborted == other.aborted)

    def to_json_dict(self):
        return {
            "config": self.config,
            "rel_l2": self.rel_l2,
            "rel_l2_components": self.rel_l2_components,
            "residual_rel_l2": self.residual_rel_l2,
            "final_losses": self.final_losses,
            "lambda_init": self.lambda_init,
            "param_count": self.param_count,
            "wall_time": self.wall_time,
            "termination": self.termination,
            "aborted": self.aborted,
            "abort_diagnostic": self.abort_diagnostic,
            "engine": self.engine,
            "seed": self.seed,
            "notes": self.notes,
            "history_rows": int(self.history.shape[0]),
            "history_file": "history.csv",
        }


class HistoryWriter:
    """Buffered history.csv writer flushing every `flush_every` rows."""

    def __init__(self, path, flush_every=100):
        self.path = path
        self.flush_every = flush_every
        self._buf = []
        self._fh = None
        if path is not None:
            self._fh = open(path, "w")
            self._fh.write(",".join(HISTORY_COLUMNS) + "\n")

    def add(self, row):
        if self._fh is None:
            return
        self._buf.append(row)
        if len(self._buf) >= self.flush_every:
            self.flush()

    def flush(self):
        if self._fh is None or not self._buf:
            return
        np.savetxt(self._fh, np.asarray(self._buf), delimiter=",", fmt="%.10g")
        self._buf.clear()
        self._fh.flush()

    def close(self):
        if self._fh is not None:
            self.flush()
            self._fh.close()
            self._fh = None


def write_record(record: RunRecord, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "record.json"), "w") as fh:
        json.dump(record.to_json_dict(), fh, indent=2)


def write_field_csv(path, columns, arrays):
    data = np.column_stack(arrays)
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        np.savetxt(fh, data, delimiter=",", fmt="%.10g")


def load_history(path):
    return np.genfromtxt(path, delimiter=",", names=True)
