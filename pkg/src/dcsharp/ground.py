"""Context-specific likelihood weighting for ground programs.

One simulation proves the query by SLD-style resolution that samples
random variables on demand, then drains a forward worklist: children of
every freshly sampled variable are visited; observed children are
weighted through the first clause whose body proves, unobserved ones
are scheduled onward.  Evidence that was never weighted naturally (the
residual evidence) is weighted afterwards in the same simulation state.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

from .analysis import ProgramAnalysis
from .bayesball import classify, compare_values
from .distributions import (NEG_INF, UNDEFINED, Distribution, draw,
                            eval_dist_expr, log_likelihood)
from .rows import WeightedRow
from .syntax import Comparison, ValueAtom
from .terms import Constant, Term, Variable, is_ground


class GroundSamplerError(Exception):
    pass


class ExclusivityError(GroundSamplerError):
    """A second clause for the same RV was not excluded by the context."""


@dataclass
class SimulationState:
    asg: Dict[Term, object] = field(default_factory=dict)
    top: Set[Term] = field(default_factory=set)
    bottom: Set[Term] = field(default_factory=set)
    forward: deque = field(default_factory=deque)
    forwarded: Set[Term] = field(default_factory=set)
    w: Dict[Term, float] = field(default_factory=dict)
    dst: Dict[Term, list] = field(default_factory=dict)

    def push_forward(self, t: Term):
        if t not in self.bottom and t not in self.forwarded:
            self.forwarded.add(t)
            self.forward.append(t)


class GroundSampler:
    """CS-LW rows for a ground program with mutually exclusive clauses."""

    def __init__(self, analysis: ProgramAnalysis, query_literals,
                 evidence: Dict[Term, object], strict: bool = False,
                 check_exclusivity: bool = False):
        if not analysis.program.is_ground():
            raise GroundSamplerError("ground sampler requires a ground program")
        self.analysis = analysis
        self.query_literals = tuple(query_literals)
        self.evidence = dict(evidence)
        self.strict = strict
        self.check_exclusivity = check_exclusivity
        query_nodes = [lit.rv_term for lit in query_literals
                       if isinstance(lit, ValueAtom)]
        if not query_nodes:
            raise GroundSamplerError("query contains no RV terms")
        for t in list(query_nodes) + list(evidence):
            if not is_ground(t):
                raise GroundSamplerError("query and evidence must be ground")
        self.classification = classify(analysis.dag, set(query_nodes),
                                       evidence.keys())
        self.residual_universe: Tuple[Term, ...] = tuple(
            sorted(self.classification.diagnostic, key=repr))
        # per node: clauses in source order as (body, distribution)
        self.clauses: Dict[Term, List[Tuple[tuple, Distribution]]] = {}
        for node in analysis.dag.nodes:
            compiled = []
            for _, clause in analysis.clauses_for(node):
                if clause.head == node:
                    compiled.append((clause.body, eval_dist_expr(clause.dist)))
            self.clauses[node] = compiled

    # -- one full simulation -------------------------------------------
    def row(self, rng) -> WeightedRow:
        st = SimulationState()
        f = 1 if self.prove_marked_ground(self.query_literals, st, rng) is not None else 0
        self.drain_forward(st, rng)
        natural = dict(st.w)
        assigned = frozenset(st.asg)
        residual = [e for e in self.residual_universe if e not in natural]
        filled = self.weight_res_ground(residual, st, rng)
        return WeightedRow(f=f, natural_weights=natural, filled_weights=filled,
                           assigned_pre_fill=assigned)

    # -- proof procedure (marked variant) --------------------------------
    def prove_marked_ground(self, goal, st: SimulationState, rng,
                            bindings: Optional[dict] = None) -> Optional[dict]:
        """Resolve the goal left to right; returns final bindings or None.
        Sampling side effects persist even when the proof later fails."""
        bindings = dict(bindings) if bindings else {}
        for lit in goal:
            if isinstance(lit, Comparison):
                a = _operand(lit.lhs, bindings)
                b = _operand(lit.rhs, bindings)
                if not compare_values(lit.op, a, b):
                    return None
                continue
            if not isinstance(lit, ValueAtom):
                raise GroundSamplerError("unsupported ground literal %r" % (lit,))
            v = self._value_of(lit.rv_term, st, rng)
            if v is _FAILED:
                return None
            if not _match_value(lit, v, bindings):
                return None
        return bindings

    def prove_ground(self, goal, st: SimulationState, rng,
                     bindings: Optional[dict] = None) -> Optional[dict]:
        """The evidence-blind proof procedure: identical resolution rules,
        but values come only from Asg and fresh samples."""
        saved = self.evidence
        self.evidence = {}
        try:
            return self.prove_marked_ground(goal, st, rng, bindings)
        finally:
            self.evidence = saved

    def _value_of(self, t: Term, st: SimulationState, rng):
        """Current value of a ground RV, sampling it if needed."""
        if t in self.evidence:
            return self.evidence[t]
        if t in st.top:
            return st.asg.get(t, _FAILED)
        st.top.add(t)
        clauses = self.clauses.get(t)
        if clauses is None:
            raise GroundSamplerError("unknown RV %r" % (t,))
        for k, (body, dist) in enumerate(clauses):
            if self.prove_marked_ground(body, st, rng) is not None:
                if self.check_exclusivity:
                    self._assert_exclusive(t, k, st)
                v = draw(dist, rng)
                st.asg[t] = v
                st.push_forward(t)
                return v
        if self.strict:
            raise GroundSamplerError(
                "non-exhaustive ground program: no clause fires for %r" % (t,))
        st.asg[t] = UNDEFINED
        st.push_forward(t)
        return UNDEFINED

    # -- forward pass -----------------------------------------------------
    def drain_forward(self, st: SimulationState, rng):
        children = self.analysis.dag.children
        while st.forward:
            a = st.forward.popleft()
            st.bottom.add(a)
            for child in children[a]:
                if child in self.evidence:
                    if child not in st.top:
                        st.top.add(child)
                        st.w[child] = self._weigh(child, st, rng)
                else:
                    st.push_forward(child)

    def _weigh(self, e: Term, st: SimulationState, rng) -> float:
        v = self.evidence[e]
        for body, dist in self.clauses[e]:
            if self.prove_marked_ground(body, st, rng) is not None:
                return log_likelihood(dist, v)
        if self.strict:
            raise GroundSamplerError(
                "non-exhaustive ground program: no clause fires for observed %r" % (e,))
        return NEG_INF

    # -- residual fill-ins --------------------------------------------------
    def weight_res_ground(self, residuals, st: SimulationState, rng) -> Dict[Term, float]:
        out: Dict[Term, float] = {}
        for e in residuals:
            out[e] = self._weigh(e, st, rng)
        return out

    # -- mutual-exclusivity assertion ----------------------------------------
    def _assert_exclusive(self, t: Term, fired: int, st: SimulationState):
        context = dict(st.asg)
        context.update(self.evidence)
        for k, (body, _) in enumerate(self.clauses[t]):
            if k == fired:
                continue
            if not _body_excluded(body, context):
                raise ExclusivityError(
                    "clauses %d and %d for %r are not mutually exclusive "
                    "under the sampled context" % (fired, k, t))


_FAILED = object()


def _match_value(lit: ValueAtom, v, bindings: dict) -> bool:
    pat = lit.value
    if lit.positive:
        if v is UNDEFINED:
            return False
        if isinstance(pat, Variable):
            if pat.name in bindings:
                return bindings[pat.name] == v
            bindings[pat.name] = v
            return True
        return pat.value == v
    # negation as failure with an undefined-aware twist: a negated atom
    # with a free value variable succeeds exactly when the RV is undefined
    if isinstance(pat, Variable) and pat.name not in bindings:
        return v is UNDEFINED
    want = bindings[pat.name] if isinstance(pat, Variable) else pat.value
    return v is not UNDEFINED and v != want


def _operand(t: Term, bindings: dict):
    if isinstance(t, Constant):
        return t.value
    if isinstance(t, Variable):
        if t.name not in bindings:
            raise GroundSamplerError("comparison on unbound value %r" % (t,))
        return bindings[t.name]
    raise GroundSamplerError("comparison operand %r" % (t,))


def _body_excluded(body, context) -> bool:
    """True when some literal is already false under the context."""
    for lit in body:
        if isinstance(lit, Comparison):
            if isinstance(lit.lhs, Constant) and isinstance(lit.rhs, Constant):
                if not compare_values(lit.op, lit.lhs.value, lit.rhs.value):
                    return True
        elif isinstance(lit, ValueAtom):
            if lit.rv_term in context and isinstance(lit.value, Constant):
                v = context[lit.rv_term]
                holds = (v is not UNDEFINED and v == lit.value.value)
                if not lit.positive:
                    holds = (v is not UNDEFINED and v != lit.value.value)
                if not holds:
                    return True
    return False
