"""Estimators over weighted sample rows.

estimate_naive implements the plain self-normalized importance-sampling
ratio.  estimate_cslw additionally multiplies each row by the estimated
expectation of its residual evidence weights, read off the filled weight
matrix.  Everything is computed in log-space; the mean of products for
the residual expectation uses log-sum-exp over rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .distributions import NEG_INF, logsumexp
from .rows import WeightedRow
from .terms import Term

BATCH_COUNT = 30


class EstimatorError(Exception):
    pass


@dataclass(frozen=True)
class Estimate:
    value: float
    std_error: Optional[float]
    n_samples: int
    algorithm: str


class WeightMatrix:
    """Rows plus the diagnostic-evidence columns; complete after fill-in."""

    def __init__(self, rows: Sequence[WeightedRow], columns: Sequence[Term]):
        self.rows = list(rows)
        self.columns = tuple(columns)
        colset = set(self.columns)
        # rows routinely share one filled dict; validate each dict once
        filled_ok: Dict[int, frozenset] = {}
        for i, row in enumerate(self.rows):
            fil = filled_ok.get(id(row.filled_weights))
            if fil is None:
                fil = frozenset(row.filled_weights)
                if not fil <= colset:
                    raise EstimatorError("row %d has residual weights outside "
                                         "the column set: %r"
                                         % (i, fil - colset))
                filled_ok[id(row.filled_weights)] = fil
            nat = set(row.natural_weights)
            if not nat <= colset:
                raise EstimatorError("row %d has natural weights outside the "
                                     "column set: %r" % (i, nat - colset))
            if nat & fil:
                raise EstimatorError("row %d weighs %r both naturally and as "
                                     "residual" % (i, nat & fil))
            if len(nat) + len(fil) != len(colset):
                raise EstimatorError(
                    "row %d is incomplete (missing %r)"
                    % (i, colset - nat - fil))

    def cell(self, row: WeightedRow, column: Term) -> float:
        if column in row.natural_weights:
            return row.natural_weights[column]
        return row.filled_weights[column]


def estimate_naive(rows: Sequence[WeightedRow], algorithm: str = "lw") -> Estimate:
    totals = [row.total_log_weight() for row in rows]
    fs = [row.f for row in rows]
    value, se = _ratio_and_stderr(fs, totals)
    return Estimate(value, se, len(rows), algorithm)


def estimate_cslw(matrix: WeightMatrix, algorithm: str = "cslw") -> Estimate:
    rows = matrix.rows
    m = len(rows)
    # A row's residual set is the column set minus its natural set, so the
    # per-row product over residual cells equals the product over all cells
    # divided by the product over the natural cells.  Summing all cells
    # once per row makes each expectation O(m * |natural|) instead of
    # O(m * |columns|).
    all_cells: List[float] = []
    cache: Dict[frozenset, float] = {}

    def residual_log_expectation(target: WeightedRow) -> float:
        if not target.filled_weights:
            return 0.0
        key = frozenset(target.natural_weights)
        if key in cache:
            return cache[key]
        if not all_cells:
            for r in rows:
                all_cells.append(sum(r.natural_weights.values()) +
                                 sum(r.filled_weights.values()))
        if key:
            logs = []
            residual_cols = None
            for i, r in enumerate(rows):
                if all_cells[i] == NEG_INF:
                    # -inf minus -inf is undefined; sum the residual
                    # columns of this row directly
                    if residual_cols is None:
                        residual_cols = [c for c in matrix.columns
                                         if c not in key]
                    logs.append(sum(matrix.cell(r, e) for e in residual_cols))
                else:
                    logs.append(all_cells[i] -
                                sum(matrix.cell(r, e) for e in key))
        else:
            logs = all_cells
        out = logsumexp(logs) - math.log(m)
        cache[key] = out
        return out

    totals = []
    for row in rows:
        lw = row.total_log_weight()
        totals.append(lw + residual_log_expectation(row))
    fs = [row.f for row in rows]
    value, se = _ratio_and_stderr(fs, totals)
    return Estimate(value, se, m, algorithm)


def std_error(rows: Sequence[WeightedRow]) -> Optional[float]:
    totals = [row.total_log_weight() for row in rows]
    fs = [row.f for row in rows]
    return _batch_means(fs, totals)


# ---------------------------------------------------------------------------

def _ratio_and_stderr(fs: List[int], totals: List[float]) -> Tuple[float, Optional[float]]:
    if not totals:
        raise EstimatorError("no rows")
    den = logsumexp(totals)
    if den == NEG_INF:
        raise EstimatorError("evidence never weighted positively")
    pos = [t for f, t in zip(fs, totals) if f]
    num = logsumexp(pos) if pos else NEG_INF
    value = math.exp(num - den) if num > NEG_INF else 0.0
    return value, _batch_means(fs, totals)


def _batch_means(fs, totals) -> Optional[float]:
    m = len(totals)
    if m < BATCH_COUNT:
        return None
    values = []
    for b in range(BATCH_COUNT):
        lo = b * m // BATCH_COUNT
        hi = (b + 1) * m // BATCH_COUNT
        bt = totals[lo:hi]
        den = logsumexp(bt)
        if den == NEG_INF:
            values.append(0.0)
            continue
        pos = [t for f, t in zip(fs[lo:hi], bt) if f]
        num = logsumexp(pos) if pos else NEG_INF
        values.append(math.exp(num - den) if num > NEG_INF else 0.0)
    mean = sum(values) / BATCH_COUNT
    var = sum((v - mean) ** 2 for v in values) / (BATCH_COUNT - 1)
    return math.sqrt(var / BATCH_COUNT)
