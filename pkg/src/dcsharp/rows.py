"""The per-simulation result record shared by all samplers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet

from .terms import Term


@dataclass
class WeightedRow:
    """One weighted sample.

    f is the query indicator; natural_weights holds log-weights recorded
    during the simulation itself (the partially weighted evidence);
    filled_weights holds the log-weights of residual evidence filled in
    afterwards on the same simulation state.  assigned_pre_fill records
    which RVs carried a value before any fill-in ran (used by the safety
    assertions).
    """

    f: int
    natural_weights: Dict[Term, float] = field(default_factory=dict)
    filled_weights: Dict[Term, float] = field(default_factory=dict)
    assigned_pre_fill: FrozenSet[Term] = frozenset()

    def total_log_weight(self) -> float:
        return sum(self.natural_weights.values())
