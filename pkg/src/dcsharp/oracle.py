"""Brute-force semantics: grounding against an assignment, probability of
closed assignments, and exact query probabilities for finite discrete
programs by world enumeration.

exact_query enumerates assignments of the unobserved ancestors of the
query and evidence variables (barren variables integrate out to one) in
topological order, pruning zero-probability branches, and ratios the
query-consistent mass against the evidence mass.
"""

from __future__ import annotations

import math
from typing import Dict, Iterator, List, Optional, Tuple

from .analysis import ProgramAnalysis
from .distributions import (NEG_INF, UNDEFINED, combine, eval_dist_expr,
                            is_continuous, log_likelihood, support)
from .fo import Resolver, _FAILED
from .syntax import (Aggregate, Comparison, DistributionalClause, Program,
                     StatModel, ValueAtom, apply_clause, apply_dist,
                     apply_literal, rename_apart)
from .terms import (Compound, Constant, FreshCounter, Term, Variable,
                    apply_subst, is_ground, unify)

ENUMERATION_BUDGET = 1 << 24


class OracleError(Exception):
    pass


class _WorldResolver(Resolver):
    """Resolves body literals against a fixed (partial) world."""

    def __init__(self, analysis: ProgramAnalysis, world: Dict[Term, object]):
        super().__init__(analysis)
        self.world = world
        self._compiled: Dict[int, tuple] = {}

    def _value_of(self, t: Term, st, rng, fresh):
        return self.world.get(t, _FAILED)

    def solutions(self, literals) -> Iterator[dict]:
        return self.solve(tuple(literals), 0, {}, None, None, FreshCounter())

    def holds(self, literals) -> bool:
        for _ in self.solutions(literals):
            return True
        return False

    def dst_of(self, t: Term) -> list:
        """Distribution multiset for t from all clause derivations whose
        bodies hold in the world."""
        dsts = []
        fresh = FreshCounter()
        for _, clause in self.analysis.clauses_for(t):
            compiled = self._compiled.get(id(clause))
            if compiled is None:
                grounded = not any(True for _ in clause.variables())
                compiled = (grounded,
                            eval_dist_expr(clause.dist) if grounded else None)
                self._compiled[id(clause)] = compiled
            if compiled[0]:
                # ground clause fast path: no renaming or unification needed
                if clause.head == t and all(self._holds_ground(l)
                                            for l in clause.body):
                    dsts.append(compiled[1])
                continue
            rc = rename_apart(clause, fresh.next())
            sigma = unify(rc.head, t)
            if sigma is None:
                continue
            body = tuple(apply_literal(l, sigma) for l in rc.body)
            dist = apply_dist(rc.dist, sigma)
            for sol in self.solve(body, 0, {}, None, None, fresh):
                dsts.append(eval_dist_expr(apply_dist(dist, sol)))
        return dsts

    def _holds_ground(self, lit) -> bool:
        from .bayesball import compare_values
        if isinstance(lit, Comparison):
            return compare_values(lit.op, lit.lhs.value, lit.rhs.value)
        if isinstance(lit, ValueAtom):
            v = self.world.get(lit.rv_term, _FAILED)
            if v is _FAILED:
                return False
            if lit.positive:
                return v is not UNDEFINED and v == lit.value.value
            if isinstance(lit.value, Variable):
                return v is UNDEFINED
            return v is not UNDEFINED and v != lit.value.value
        raise OracleError("unsupported ground literal %r" % (lit,))


def _check_closed(analysis: ProgramAnalysis, u: Dict[Term, object]):
    for t in u:
        if t not in analysis.dag.topo_rank:
            raise OracleError("assignment names unknown RV %r" % (t,))
        for p in analysis.dag.parents[t]:
            if p not in u:
                raise OracleError(
                    "assignment is not closed: %r influences %r but is missing"
                    % (p, t))


# ---------------------------------------------------------------------------

def ground_program(p: Program, u: Dict[Term, object],
                   analysis: Optional[ProgramAnalysis] = None
                   ) -> List[DistributionalClause]:
    """All ground clause instances over the assigned RVs, with value
    variables instantiated from the assignment."""
    analysis = analysis or ProgramAnalysis(p)
    _check_closed(analysis, u)
    keys = sorted(u, key=repr)
    out: List[DistributionalClause] = []
    for clause in p.clauses:
        for theta in _clause_groundings(clause, keys, u):
            out.append(apply_clause(clause, theta))
    return out


def _clause_groundings(clause: DistributionalClause, keys,
                       u: Dict[Term, object]) -> Iterator[dict]:
    world = set(keys)

    def ground_term(pattern: Term, theta: dict) -> Iterator[dict]:
        pat = apply_subst(pattern, theta)
        if is_ground(pat):
            if pat in world:
                yield theta
            return
        for t in keys:
            sigma = unify(pat, t)
            if sigma is not None:
                merged = dict(theta)
                merged.update(sigma)
                yield merged

    def step(lits, i, theta) -> Iterator[dict]:
        if i == len(lits):
            yield theta
            return
        lit = lits[i]
        if isinstance(lit, ValueAtom):
            for theta2 in ground_term(lit.rv_term, theta):
                # a positive atom's value variable takes whatever value the
                # assignment gives the RV term
                if lit.positive and isinstance(lit.value, Variable) \
                        and lit.value.name not in theta2:
                    t = apply_subst(lit.rv_term, theta2)
                    v = u[t]
                    if v is not UNDEFINED:
                        theta2 = dict(theta2)
                        theta2[lit.value.name] = _value_term(v)
                yield from step(lits, i + 1, theta2)
        else:
            yield from step(lits, i + 1, theta)

    for theta0 in ground_term(clause.head, {}):
        yield from step(clause.body, 0, theta0)


def _value_term(v) -> Term:
    return v if isinstance(v, Compound) else Constant(v)


def assignment_probability(p: Program, u: Dict[Term, object],
                           analysis: Optional[ProgramAnalysis] = None) -> float:
    """Log probability (density) of a closed assignment: the product over
    assigned RVs of their combined-distribution likelihoods."""
    analysis = analysis or ProgramAnalysis(p)
    _check_closed(analysis, u)
    resolver = _WorldResolver(analysis, u)
    rule = p.combining_rule
    total = 0.0
    for t in sorted(u, key=lambda x: analysis.dag.topo_rank[x]):
        dsts = resolver.dst_of(t)
        v = u[t]
        if not dsts:
            if v is UNDEFINED:
                continue
            raise OracleError(
                "no clause fires for %r but it is assigned %r" % (t, v))
        if v is UNDEFINED:
            return NEG_INF
        total += log_likelihood(combine(rule, dsts), v)
    return total


def exact_query(p: Program, query_literals, evidence: Dict[Term, object],
                analysis: Optional[ProgramAnalysis] = None) -> float:
    """P(query | evidence) for finite discrete programs, by enumeration."""
    analysis = analysis or ProgramAnalysis(p)
    for clause in p.clauses:
        if is_continuous_expr(clause):
            raise OracleError("oracle is discrete-only, %r is continuous"
                              % (clause.head,))
    query_nodes = [lit.rv_term for lit in query_literals
                   if isinstance(lit, ValueAtom)]
    seeds = set(query_nodes) | set(evidence)
    for t in seeds:
        if t not in analysis.dag.topo_rank:
            raise OracleError("unknown RV %r" % (t,))
    closure = analysis.dag.ancestors(seeds)
    order = [t for t in analysis.dag.topological() if t in closure]
    rule = p.combining_rule

    world: Dict[Term, object] = {}
    resolver = _WorldResolver(analysis, world)
    budget = [0]
    num = [0.0]
    den = [0.0]

    def recurse(i: int, weight: float):
        if weight == 0.0:
            return
        if i == len(order):
            den[0] += weight
            if resolver.holds(query_literals):
                num[0] += weight
            return
        budget[0] += 1
        if budget[0] > ENUMERATION_BUDGET:
            raise OracleError("enumeration budget exceeded")
        t = order[i]
        dsts = resolver.dst_of(t)
        combined = combine(rule, dsts) if dsts else None
        if t in evidence:
            v = evidence[t]
            pr = _mass(combined, v)
            world[t] = v
            recurse(i + 1, weight * pr)
            del world[t]
        elif combined is None:
            world[t] = UNDEFINED
            recurse(i + 1, weight)
            del world[t]
        else:
            for v, pr in sorted(support(combined), key=lambda e: repr(e[0])):
                if pr <= 0.0:
                    continue
                world[t] = v
                recurse(i + 1, weight * pr)
            if t in world:
                del world[t]

    recurse(0, 1.0)
    if den[0] <= 0.0:
        raise OracleError("evidence has probability zero")
    return num[0] / den[0]


def _mass(combined, v) -> float:
    if combined is None:
        return 0.0
    ll = log_likelihood(combined, v)
    return math.exp(ll) if ll > NEG_INF else 0.0


def is_continuous_expr(clause: DistributionalClause) -> bool:
    from .syntax import GaussianExpr
    return isinstance(clause.dist, GaussianExpr)
