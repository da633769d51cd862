"""Column-wise discrepancy between two result tables."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SchemaError
from .runner import read_csv


@dataclass(frozen=True)
class Discrepancy:
    column: str
    relative_l2: float
    max_abs: float

    def to_dict(self):
        return {"column": self.column, "relative_l2": self.relative_l2, "max_abs": self.max_abs}


def _table(run):
    """Accept a path, a ``ScenarioResult`` or a ``(columns, data)`` pair."""
    if hasattr(run, "columns") and hasattr(run, "data"):
        return list(run.columns), np.asarray(run.data, dtype=float)
    if isinstance(run, tuple):
        return list(run[0]), np.asarray(run[1], dtype=float)
    return read_csv(run)


def relative_l2(a, b):
    """``||a - b|| / ||b||`` with ``b`` the reference; absolute norm if ``b`` vanishes."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    diff = float(np.linalg.norm(a - b))
    ref = float(np.linalg.norm(b))
    return diff / ref if ref > 0 else diff


def compare(run_a, run_b, columns=None, time_column="t"):
    """Discrepancies of ``run_a`` against the reference ``run_b``.

    If the time grids differ, ``run_a`` is linearly interpolated onto the
    times of ``run_b``.

    Raises
    ------
    SchemaError
        If a requested column is missing from either table.
    """
    cols_a, data_a = _table(run_a)
    cols_b, data_b = _table(run_b)
    if columns is None:
        columns = [c for c in cols_b if c in cols_a and c != time_column]
    for name in list(columns) + [time_column]:
        for cols, label in ((cols_a, "first"), (cols_b, "second")):
            if name not in cols:
                raise SchemaError(f"column {name!r} missing from the {label} run")
    ta = data_a[:, cols_a.index(time_column)]
    tb = data_b[:, cols_b.index(time_column)]
    same_grid = ta.shape == tb.shape and np.array_equal(ta, tb)
    report = []
    for name in columns:
        a = data_a[:, cols_a.index(name)]
        b = data_b[:, cols_b.index(name)]
        if not same_grid:
            a = np.interp(tb, ta, a)
        report.append(Discrepancy(name, relative_l2(a, b), float(np.max(np.abs(a - b))) if len(b) else 0.0))
    return report
