"""Benchmark drivers emitting CSV rows.

Two studies: (a) likelihood weighting on tabular programs versus
context-specific LW on the equivalent tree programs, errors measured
against the exact oracle; (b) scaling of first-order context-specific
LW on a relational loans/accounts program whose RV count is 3n^2 + 6n
in the domain size n.
"""

from __future__ import annotations

import csv
import time
from typing import Dict, Iterable, List, Optional, Sequence

from .analysis import ProgramAnalysis
from .bifio import random_tree_bn
from .engine import build_sampler, collect_rows, estimate_rows
from .oracle import exact_query
from .parser import parse_program
from .syntax import Program, ValueAtom
from .terms import Compound, Constant, Term

CSV_COLUMNS = ("algorithm", "size", "repetition", "estimate",
               "abs_error_vs_oracle", "elapsed_ms")


# ---------------------------------------------------------------------------
# the relational loans program (noisy-OR combining)

_EXP2_TEMPLATE = """
home_loan(L) ~ bernoulli(0.7) <- loan(L) ~= t.
high_savings(A) ~ bernoulli(0.3) <- account(A) ~= t.
has_account(C,A) ~ bernoulli(0.01) <- client(C) ~= t, account(A) ~= t.
account_loan(A,L) ~ bernoulli(0.02) <- account(A) ~= t, loan(L) ~= t.
has_loan(C,L) ~ bernoulli(0.9) <- has_account(C,A) ~= t, account_loan(A,L) ~= t.
has_loan(C,L) ~ bernoulli(0.001) <- client(C) ~= t, loan(L) ~= t.
debt(C) ~ bernoulli(0.9) <- has_loan(C,L) ~= t, home_loan(L) ~= t.
debt(C) ~ bernoulli(0.6) <- has_loan(C,L) ~= t, home_loan(L) ~= f.
debt(C) ~ bernoulli(0.3) <- has_account(C,A) ~= t, high_savings(A) ~= f.
debt(C) ~ bernoulli(0.01) <- client(C) ~= t.
"""


def experiment2_program(n: int) -> Program:
    """Loans/accounts program over n clients, n accounts, n loans."""
    facts = []
    for kind in ("client", "account", "loan"):
        prefix = kind[0]
        for i in range(1, n + 1):
            facts.append("%s(%s%d) ~ val(t)." % (kind, prefix, i))
    text = "\n".join(facts) + "\n" + _EXP2_TEMPLATE
    return parse_program(text, combining_rule="noisyor")


def experiment2_query() -> tuple:
    return (ValueAtom(Compound("debt", (Constant("c1"),)), Constant("t")),)


def experiment2_evidence(n: int) -> Dict[Term, object]:
    """Every relationship false, every attribute true, other debts true."""
    ev: Dict[Term, object] = {}
    for i in range(1, n + 1):
        ci, ai, li = Constant("c%d" % i), Constant("a%d" % i), Constant("l%d" % i)
        ev[Compound("home_loan", (li,))] = "t"
        ev[Compound("high_savings", (ai,))] = "f"
        if i > 1:
            ev[Compound("debt", (ci,))] = "t"
        for j in range(1, n + 1):
            aj, lj = Constant("a%d" % j), Constant("l%d" % j)
            ev[Compound("has_account", (ci, aj))] = "t"
            ev[Compound("account_loan", (ai, lj))] = "t"
            ev[Compound("has_loan", (ci, lj))] = "f"
    return ev


# ---------------------------------------------------------------------------
# query selection for generated networks

def choose_query_evidence(analysis: ProgramAnalysis, closure_cap: int = 18,
                          n_evidence: int = 3):
    """A query node and diagnostic evidence whose unobserved ancestor
    closure stays small enough for exact enumeration."""
    dag = analysis.dag
    by_rank = dag.topological()
    query = max(by_rank,
                key=lambda t: (len(dag.ancestors({t}))
                               if len(dag.ancestors({t})) <= closure_cap - 4
                               else -1))
    seeds = {query}
    evidence: Dict[Term, object] = {}
    for t in reversed(by_rank):
        if len(evidence) >= n_evidence:
            break
        if t == query or t in evidence:
            continue
        if query not in dag.ancestors({t}):
            continue
        if len(dag.ancestors(seeds | {t})) <= closure_cap:
            evidence[t] = "t"
            seeds.add(t)
    query_literals = (ValueAtom(query, Constant("t")),)
    return query_literals, evidence


# ---------------------------------------------------------------------------
# study (a): tree CS-LW versus tabular LW

def bench_tree_vs_tabular(n_pairs: int = 20, repetitions: int = 30,
                          sample_sizes: Sequence[int] = (1000,),
                          seed: int = 0, min_nodes: int = 15,
                          max_nodes: int = 40) -> List[dict]:
    rows: List[dict] = []
    for pair in range(n_pairs):
        n_nodes = min_nodes + (pair * 7919) % (max_nodes - min_nodes + 1)
        tree_p, tab_p, _ = random_tree_bn(n_nodes, max_parents=3,
                                          structure_density=0.6,
                                          seed=seed + pair)
        tab_a = ProgramAnalysis(tab_p)
        query, evidence = choose_query_evidence(tab_a)
        truth = exact_query(tab_p, query, evidence, analysis=tab_a)
        for algorithm, program in (("lw", tab_p), ("cslw", tree_p)):
            sampler = build_sampler(program, query, evidence, algorithm)
            for n_samples in sample_sizes:
                for rep in range(repetitions):
                    run_seed = seed + 1000 * pair + rep
                    start = time.perf_counter()
                    srows = collect_rows(sampler, run_seed, 0, n_samples)
                    est = estimate_rows(sampler, srows, algorithm)
                    elapsed = (time.perf_counter() - start) * 1000.0
                    rows.append({"algorithm": algorithm, "size": n_samples,
                                 "repetition": rep, "estimate": est.value,
                                 "abs_error_vs_oracle": abs(est.value - truth),
                                 "elapsed_ms": elapsed})
    return rows


# ---------------------------------------------------------------------------
# study (b): scaling in the domain size

def bench_scaling(domains: Iterable[int] = (1, 2, 5, 10, 20),
                  repetitions: int = 30, n_samples: int = 10000,
                  seed: int = 0) -> List[dict]:
    rows: List[dict] = []
    for n in domains:
        program = experiment2_program(n)
        query = experiment2_query()
        evidence = experiment2_evidence(n)
        truth: Optional[float] = None
        if n == 1:
            truth = exact_query(program, query, evidence)
        sampler = build_sampler(program, query, evidence, "focslw")
        for rep in range(repetitions):
            run_seed = seed + 1000 * n + rep
            start = time.perf_counter()
            srows = collect_rows(sampler, run_seed, 0, n_samples)
            est = estimate_rows(sampler, srows, "focslw")
            elapsed = (time.perf_counter() - start) * 1000.0
            rows.append({"algorithm": "focslw", "size": n, "repetition": rep,
                         "estimate": est.value,
                         "abs_error_vs_oracle":
                             abs(est.value - truth) if truth is not None else "",
                         "elapsed_ms": elapsed})
    return rows


def write_csv(rows: List[dict], stream, size_label: str = "n_samples"):
    header = [size_label if c == "size" else c for c in CSV_COLUMNS]
    writer = csv.writer(stream)
    writer.writerow(header)
    for row in rows:
        writer.writerow([row[c] for c in CSV_COLUMNS])
