"""Query orchestration: build a sampler, draw weighted rows with
deterministic per-row random streams, and reduce them to an estimate.

Row i of a run with seed s always uses the same random stream, whether
rows are drawn serially or split across worker processes, so results
are reproducible and independent of the --jobs setting.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from random import Random
from typing import Dict, List, Optional, Sequence

from .analysis import ProgramAnalysis
from .bayesball import LwSampler
from .estimator import (Estimate, WeightMatrix, estimate_cslw, estimate_naive)
from .fo import FoSampler
from .ground import GroundSampler
from .rows import WeightedRow
from .syntax import Program
from .terms import Term

ALGORITHMS = ("lw", "cslw", "focslw")

# Rows are drawn from one random stream per fixed-size chunk.  Chunk
# boundaries depend only on the row index, so splitting the same run
# across workers reproduces the serial stream exactly.
CHUNK_ROWS = 256
_MASK64 = (1 << 64) - 1


class EngineError(Exception):
    pass


@dataclass(frozen=True)
class QueryResult:
    estimate: float
    std_error: Optional[float]
    samples: int
    algorithm: str
    seed: int
    elapsed_ms: float

    def as_dict(self) -> dict:
        return {"estimate": self.estimate, "std_error": self.std_error,
                "samples": self.samples, "algorithm": self.algorithm,
                "seed": self.seed, "elapsed_ms": self.elapsed_ms}


def chunk_rng(seed: int, chunk: int) -> Random:
    """An independent, reproducible random stream for one row chunk
    (splitmix64 finalizer over a seed/chunk combination)."""
    x = (seed * 0x9E3779B97F4A7C15 + chunk + 1) & _MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK64
    x ^= x >> 31
    return Random(x)


def build_sampler(program: Program, query_literals, evidence: Dict[Term, object],
                  algorithm: str, strict: bool = False):
    if algorithm not in ALGORITHMS:
        raise EngineError("unknown algorithm %r" % (algorithm,))
    analysis = ProgramAnalysis(program)
    if algorithm == "lw":
        return LwSampler(analysis, query_literals, evidence, strict=strict)
    if algorithm == "cslw":
        return GroundSampler(analysis, query_literals, evidence, strict=strict)
    return FoSampler(analysis, query_literals, evidence, strict=strict)


def collect_rows(sampler, seed: int, lo: int, hi: int) -> List[WeightedRow]:
    """Rows lo..hi-1; lo must sit on a chunk boundary."""
    if lo % CHUNK_ROWS:
        raise EngineError("row range must start on a %d-row boundary"
                          % CHUNK_ROWS)
    rows: List[WeightedRow] = []
    i = lo
    while i < hi:
        rng = chunk_rng(seed, i // CHUNK_ROWS)
        stop = min(i + CHUNK_ROWS, hi)
        row = sampler.row
        rows.extend(row(rng) for _ in range(stop - i))
        i = stop
    return rows


def estimate_rows(sampler, rows: Sequence[WeightedRow], algorithm: str) -> Estimate:
    if algorithm == "lw":
        return estimate_naive(rows, algorithm)
    matrix = WeightMatrix(rows, sampler.residual_universe)
    return estimate_cslw(matrix, algorithm)


def run_query(program: Program, query_literals, evidence: Dict[Term, object],
              algorithm: str = "cslw", samples: int = 1000, seed: int = 0,
              strict: bool = False, jobs: int = 1) -> QueryResult:
    start = time.perf_counter()
    sampler = build_sampler(program, query_literals, evidence, algorithm,
                            strict=strict)
    if jobs <= 1 or samples < 2 * jobs * CHUNK_ROWS:
        rows = collect_rows(sampler, seed, 0, samples)
    else:
        bounds = [samples * k // jobs // CHUNK_ROWS * CHUNK_ROWS
                  for k in range(jobs)] + [samples]
        chunks = [(sampler, seed, bounds[k], bounds[k + 1]) for k in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_collect_chunk, chunks))
        rows = [r for part in parts for r in part]
    est = estimate_rows(sampler, rows, algorithm)
    elapsed_ms = (time.perf_counter() - start) * 1000.0
    return QueryResult(est.value, est.std_error, samples, algorithm, seed,
                       elapsed_ms)


def _collect_chunk(args) -> List[WeightedRow]:
    sampler, seed, lo, hi = args
    return collect_rows(sampler, seed, lo, hi)
