"""Bayes-ball: requisite-variable classification, a brute-force
d-separation oracle for testing, and the plain likelihood-weighting
sampler that classification gives for free.

Classification marks nodes while bouncing a ball over the DAG:
 1. an unobserved node visited from a child marks top (visit parents)
    and bottom (visit children);
 2. an unobserved node visited from a parent marks bottom and visits
    its children;
 3. an observed node visited from a child does nothing;
 4. an observed node visited from a parent marks top and visits its
    parents.
Observed nodes marked on top are the diagnostic evidence (their CPDs
matter); observed nodes merely visited are predictive; unobserved nodes
marked on top are the requisite sampling set.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Set, Tuple

from .analysis import GroundDependencyDag, ProgramAnalysis
from .distributions import (UNDEFINED, combine, draw, eval_dist_expr,
                            log_likelihood, NEG_INF)
from .rows import WeightedRow
from .syntax import Comparison, Program, ValueAtom
from .terms import Constant, Term, Variable, is_ground


class BayesBallError(Exception):
    pass


@dataclass(frozen=True)
class RequisiteClassification:
    diagnostic: FrozenSet[Term]            # observed, marked on top
    predictive: FrozenSet[Term]            # observed, visited, not on top
    requisite_unobserved: FrozenSet[Term]  # query plus requisite latent


def classify(dag: GroundDependencyDag, query: Iterable[Term],
             evidence: Iterable[Term]) -> RequisiteClassification:
    query = set(query)
    observed = set(evidence)
    for t in query | observed:
        if t not in dag.topo_rank:
            raise BayesBallError("unknown node %r" % (t,))
    if query & observed:
        raise BayesBallError("query and evidence overlap: %r" % (query & observed,))

    top: Set[Term] = set()
    bottom: Set[Term] = set()
    visited: Set[Term] = set()
    scheduled: Set[Tuple[Term, bool]] = set()
    work = deque()

    def schedule(node: Term, from_child: bool):
        key = (node, from_child)
        if key not in scheduled:
            scheduled.add(key)
            work.append(key)

    for q in sorted(query, key=repr):
        schedule(q, True)

    while work:
        node, from_child = work.popleft()
        visited.add(node)
        if node not in observed:
            if from_child and node not in top:
                top.add(node)
                for p in dag.parents[node]:
                    schedule(p, True)
            if node not in bottom:
                bottom.add(node)
                for c in dag.children[node]:
                    schedule(c, False)
        elif not from_child and node not in top:
            top.add(node)
            for p in dag.parents[node]:
                schedule(p, True)

    return RequisiteClassification(
        diagnostic=frozenset(observed & top),
        predictive=frozenset((observed & visited) - top),
        requisite_unobserved=frozenset(top - observed))


# ---------------------------------------------------------------------------
# brute-force d-separation oracle

def dsep(dag: GroundDependencyDag, xs: Iterable[Term], ys: Iterable[Term],
         zs: Iterable[Term]) -> bool:
    """True iff every undirected path between xs and ys is blocked by zs,
    checked by exhaustive simple-path search (test oracle for small DAGs)."""
    xs, ys, zs = set(xs), set(ys), set(zs)
    if (xs & ys) or (xs & zs) or (ys & zs):
        raise BayesBallError("dsep arguments must be disjoint")
    desc = _descendants(dag)

    def blocked(path: List[Term]) -> bool:
        for i in range(1, len(path) - 1):
            prev, mid, nxt = path[i - 1], path[i], path[i + 1]
            into_left = mid in dag.children.get(prev, ())
            into_right = mid in dag.children.get(nxt, ())
            collider = into_left and into_right
            if collider:
                if mid not in zs and not (desc[mid] & zs):
                    return True
            elif mid in zs:
                return True
        return False

    for src in xs:
        stack = [[src]]
        while stack:
            path = stack.pop()
            last = path[-1]
            if last in ys and len(path) > 1:
                if not blocked(path):
                    return False
                continue
            for nb in set(dag.parents.get(last, ())) | set(dag.children.get(last, ())):
                if nb not in path:
                    stack.append(path + [nb])
    return True


def _descendants(dag: GroundDependencyDag) -> Dict[Term, Set[Term]]:
    out: Dict[Term, Set[Term]] = {}
    for node in reversed(dag.topological()):
        s: Set[Term] = set()
        for c in dag.children[node]:
            s.add(c)
            s |= out[c]
        out[node] = s
    return out


# ---------------------------------------------------------------------------
# plain likelihood weighting over the ground DAG

class LwSampler:
    """Likelihood weighting restricted to the Bayes-ball requisite set.

    Requires a ground program (one value per clause-head term).  Every
    requisite unobserved node is sampled topologically from the combined
    distribution of the clauses whose bodies hold under the current full
    assignment; every diagnostic evidence node is weighted the same way.
    """

    def __init__(self, analysis: ProgramAnalysis, query_literals,
                 evidence: Dict[Term, object], strict: bool = False):
        if not analysis.program.is_ground():
            raise BayesBallError("plain LW requires a ground program")
        self.analysis = analysis
        self.rule = analysis.program.combining_rule
        self.query_literals = tuple(query_literals)
        self.evidence = dict(evidence)
        self.strict = strict
        query_nodes = _query_nodes(query_literals, analysis)
        self.classification = classify(analysis.dag, query_nodes,
                                       evidence.keys())
        active = self.classification.requisite_unobserved | self.classification.diagnostic
        self.plan = [t for t in analysis.dag.topological() if t in active]
        self.cpds = {t: _compile_node(analysis, t) for t in self.plan}

    def row(self, rng) -> WeightedRow:
        asg = dict(self.evidence)
        weights: Dict[Term, float] = {}
        requisite = self.classification.requisite_unobserved
        for node in self.plan:
            dists = [d for conds, d in self.cpds[node]
                     if _conditions_hold(conds, asg)]
            if node in requisite:
                if not dists:
                    if self.strict:
                        raise BayesBallError("no clause fires for %r" % (node,))
                    asg[node] = UNDEFINED
                else:
                    asg[node] = draw(combine(self.rule, dists), rng)
            else:
                v = self.evidence[node]
                if not dists:
                    if self.strict:
                        raise BayesBallError("no clause fires for observed %r" % (node,))
                    weights[node] = NEG_INF
                else:
                    weights[node] = log_likelihood(combine(self.rule, dists), v)
        f = evaluate_query(self.query_literals, asg)
        assigned = frozenset(t for t in asg if t not in self.evidence)
        return WeightedRow(f=f, natural_weights=weights,
                           assigned_pre_fill=assigned)


def _query_nodes(query_literals, analysis) -> List[Term]:
    nodes = []
    for lit in query_literals:
        if isinstance(lit, ValueAtom):
            if not is_ground(lit.rv_term):
                raise BayesBallError("query RV terms must be ground")
            if not analysis.rv_model.entails(_rv_atom(lit.rv_term)):
                raise BayesBallError("query names unknown RV %r" % (lit.rv_term,))
            nodes.append(lit.rv_term)
    if not nodes:
        raise BayesBallError("query contains no RV terms")
    return nodes


def _rv_atom(t: Term):
    from .terms import Compound
    return Compound("rv", (t,))


def _compile_node(analysis: ProgramAnalysis, node: Term):
    """(conditions, distribution) pairs for a ground node, source order.
    Conditions are (rv_term, value, positive) triples; constant-true
    comparisons are folded away."""
    out = []
    for _, clause in analysis.clauses_for(node):
        if clause.head != node:
            continue
        conds = []
        ok = True
        for lit in clause.body:
            if isinstance(lit, ValueAtom):
                conds.append((lit.rv_term, lit.value, lit.positive))
            elif isinstance(lit, Comparison):
                if not _eval_ground_comparison(lit):
                    ok = False
                    break
            else:
                raise BayesBallError(
                    "plain LW supports value atoms and ground comparisons only")
        if ok:
            out.append((tuple(conds), eval_dist_expr(clause.dist)))
    return out


def _eval_ground_comparison(lit: Comparison) -> bool:
    if not (isinstance(lit.lhs, Constant) and isinstance(lit.rhs, Constant)):
        raise BayesBallError("comparison %r is not ground" % (lit,))
    return compare_values(lit.op, lit.lhs.value, lit.rhs.value)


def compare_values(op: str, a, b) -> bool:
    if op == "==":
        if isinstance(a, (int, float)) and isinstance(b, (int, float)):
            return abs(a - b) <= 1e-9 * max(1.0, abs(a), abs(b))
        return a == b
    if not (isinstance(a, (int, float)) and isinstance(b, (int, float))):
        raise BayesBallError("ordering comparison on non-numbers: %r %s %r"
                             % (a, op, b))
    if op == "<":
        return a < b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    if op == "=<":
        return a <= b
    raise BayesBallError("unknown comparison operator %r" % (op,))


def _conditions_hold(conds, asg) -> bool:
    for rv_term, value, positive in conds:
        v = asg.get(rv_term, UNDEFINED)
        if positive:
            if v is UNDEFINED or not isinstance(value, Constant) \
                    or v != value.value:
                return False
        else:
            if isinstance(value, Variable):
                if v is not UNDEFINED:
                    return False
            elif not (v is not UNDEFINED and v != value.value):
                return False
    return True


def evaluate_query(literals, asg) -> int:
    """Indicator of a ground query conjunction against a full assignment.
    Value positions may hold variables later constrained by comparisons."""
    bindings: Dict[str, object] = {}
    for lit in literals:
        if isinstance(lit, ValueAtom):
            v = asg.get(lit.rv_term, UNDEFINED)
            pat = lit.value
            if lit.positive:
                if v is UNDEFINED:
                    return 0
                if isinstance(pat, Variable):
                    if pat.name in bindings:
                        if bindings[pat.name] != v:
                            return 0
                    else:
                        bindings[pat.name] = v
                elif pat.value != v:
                    return 0
            else:
                if isinstance(pat, Variable) and pat.name not in bindings:
                    if v is not UNDEFINED:
                        return 0
                else:
                    want = bindings.get(pat.name) if isinstance(pat, Variable) \
                        else pat.value
                    if not (v is not UNDEFINED and v != want):
                        return 0
        elif isinstance(lit, Comparison):
            a = _operand_value(lit.lhs, bindings)
            b = _operand_value(lit.rhs, bindings)
            if not compare_values(lit.op, a, b):
                return 0
        else:
            raise BayesBallError("unsupported query literal %r" % (lit,))
    return 1


def _operand_value(t: Term, bindings):
    if isinstance(t, Constant):
        return t.value
    if isinstance(t, Variable):
        if t.name not in bindings:
            raise BayesBallError("comparison on unbound value %r" % (t,))
        return bindings[t.name]
    raise BayesBallError("comparison operand %r must be a variable or constant" % (t,))
