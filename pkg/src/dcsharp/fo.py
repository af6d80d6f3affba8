"""First-order context-specific likelihood weighting.

Sampling proceeds by SLD resolution with unification over the program's
clauses.  When a random variable is needed, every clause whose head
unifies is proven in all possible ways, each successful derivation
contributes its distribution to the variable's Dst multiset, and one
value is drawn from the combined distribution.  Negation as failure,
aggregates (findall + fold), and linear statistical atoms are resolved
in-line.  The forward pass and residual fill-ins mirror the ground
sampler.
"""

from __future__ import annotations

import random
from typing import Dict, Iterator, List, Optional, Tuple

from .analysis import ProgramAnalysis
from .bayesball import classify, compare_values
from .distributions import (NEG_INF, UNDEFINED, combine, draw,
                            eval_dist_expr, log_likelihood, value_to_term)
from .ground import SimulationState
from .rows import WeightedRow
from .syntax import (Aggregate, Comparison, StatModel, ValExpr, ValueAtom,
                     apply_dist, apply_literal, rename_apart)
from .terms import (Compound, Constant, FreshCounter, Term, Variable,
                    apply_subst, is_ground, unify)


class FoSamplerError(Exception):
    pass


class CombinationExclusivityError(FoSamplerError):
    """A clause grounding neither fired nor was excluded by the context."""


_FAILED = object()


class Resolver:
    """SLD resolution over body literals; how an RV gets its value is
    left to subclasses (sampling, or reading a fixed world)."""

    def __init__(self, analysis: ProgramAnalysis):
        self.analysis = analysis

    def _value_of(self, t: Term, st, rng, fresh):
        raise NotImplementedError

    def solve(self, goal: tuple, idx: int, theta: dict, st, rng,
              fresh: FreshCounter) -> Iterator[dict]:
        """Enumerate answer substitutions with chronological backtracking.
        Side effects of _value_of persist across failed branches."""
        if idx == len(goal):
            yield theta
            return
        lit = apply_literal(goal[idx], theta)
        if isinstance(lit, ValueAtom):
            yield from self._solve_value_atom(lit, goal, idx, theta, st, rng, fresh)
        elif isinstance(lit, Comparison):
            a = _comparison_operand(lit.lhs)
            b = _comparison_operand(lit.rhs)
            if compare_values(lit.op, a, b):
                yield from self.solve(goal, idx + 1, theta, st, rng, fresh)
        elif isinstance(lit, Aggregate):
            yield from self._solve_aggregate(lit, goal, idx, theta, st, rng, fresh)
        elif isinstance(lit, StatModel):
            yield from self._solve_stat_model(lit, goal, idx, theta, st, rng, fresh)
        else:
            raise FoSamplerError("unsupported literal %r" % (lit,))

    def _solve_value_atom(self, lit, goal, idx, theta, st, rng, fresh):
        if lit.positive:
            for _, sigma1 in self.analysis.rv_groundings(lit.rv_term):
                t = apply_subst(lit.rv_term, sigma1)
                v = self._value_of(t, st, rng, fresh)
                if v is _FAILED or v is UNDEFINED:
                    continue
                pat = lit.value
                theta2 = dict(theta)
                theta2.update(sigma1)
                if isinstance(pat, Variable):
                    if pat.name in sigma1:
                        bound = sigma1[pat.name]
                        if not (isinstance(bound, Constant) and bound.value == v):
                            continue
                    else:
                        theta2[pat.name] = value_to_term(v)
                elif isinstance(pat, Constant):
                    if pat.value != v:
                        continue
                else:
                    if pat != value_to_term(v):
                        continue
                yield from self.solve(goal, idx + 1, theta2, st, rng, fresh)
        else:
            # safe negation guarantees the RV term is ground here
            if not is_ground(lit.rv_term):
                raise FoSamplerError("negated literal %r is not ground" % (lit,))
            if not self.analysis.rv_model.entails(Compound("rv", (lit.rv_term,))):
                # a meaningless term never takes a value: negation succeeds
                # only against an unbound value pattern
                if isinstance(lit.value, Variable):
                    yield from self.solve(goal, idx + 1, theta, st, rng, fresh)
                return
            v = self._value_of(lit.rv_term, st, rng, fresh)
            if v is _FAILED:
                return
            if isinstance(lit.value, Variable):
                ok = v is UNDEFINED
            else:
                ok = v is not UNDEFINED and v != lit.value.value
            if ok:
                yield from self.solve(goal, idx + 1, theta, st, rng, fresh)

    def _solve_aggregate(self, lit, goal, idx, theta, st, rng, fresh):
        values = []
        for sol in self.solve(lit.inner_goal, 0, {}, st, rng, fresh):
            t = apply_subst(lit.template, sol)
            if not is_ground(t):
                raise FoSamplerError("aggregate template %r left unbound" % (t,))
            values.append(t.value if isinstance(t, Constant) else t)
        res = lit.result
        if lit.positive:
            if not values:
                return
            r = eval_aggregate(lit.name, values)
            if isinstance(res, Variable):
                theta2 = dict(theta)
                theta2[res.name] = value_to_term(r)
                yield from self.solve(goal, idx + 1, theta2, st, rng, fresh)
            elif isinstance(res, Constant) and res.value == r:
                yield from self.solve(goal, idx + 1, theta, st, rng, fresh)
        else:
            if not values:
                yield from self.solve(goal, idx + 1, theta, st, rng, fresh)
                return
            r = eval_aggregate(lit.name, values)
            if isinstance(res, Variable):
                return      # positive version would succeed binding the result
            if isinstance(res, Constant) and res.value != r:
                yield from self.solve(goal, idx + 1, theta, st, rng, fresh)

    def _solve_stat_model(self, lit, goal, idx, theta, st, rng, fresh):
        total = lit.params[-1]
        for x, w in zip(lit.inputs, lit.params[:-1]):
            if not isinstance(x, Constant) or not isinstance(x.value, (int, float)):
                raise FoSamplerError("statistical atom input %r is not a number" % (x,))
            total += w * x.value
        out = lit.output
        if isinstance(out, Variable):
            theta2 = dict(theta)
            theta2[out.name] = Constant(total)
            yield from self.solve(goal, idx + 1, theta2, st, rng, fresh)
        elif isinstance(out, Constant) and compare_values("==", out.value, total):
            yield from self.solve(goal, idx + 1, theta, st, rng, fresh)


class FoSampler(Resolver):
    def __init__(self, analysis: ProgramAnalysis, query_literals,
                 evidence: Dict[Term, object], strict: bool = False,
                 check_combination: bool = False):
        super().__init__(analysis)
        self.rule = analysis.program.combining_rule
        self.query_literals = tuple(query_literals)
        self.evidence = dict(evidence)
        self.strict = strict
        self.check_combination = check_combination
        query_nodes = [lit.rv_term for lit in query_literals
                       if isinstance(lit, ValueAtom)]
        if not query_nodes:
            raise FoSamplerError("query contains no RV terms")
        for t in query_nodes:
            if not is_ground(t):
                raise FoSamplerError("query RV terms must be ground")
        for t, v in evidence.items():
            if v is UNDEFINED:
                raise FoSamplerError(
                    "evidence must observe a concrete value, got undefined for %r" % (t,))
        self.classification = classify(analysis.dag, set(query_nodes),
                                       evidence.keys())
        self.residual_universe: Tuple[Term, ...] = tuple(
            sorted(self.classification.diagnostic, key=repr))
        # per clause: (is ground, pre-evaluated distribution when ground)
        self._compiled: Dict[int, tuple] = {}
        self._static_weights: Dict[Term, float] = {}
        self._fill_cache: Dict[frozenset, dict] = {}
        self._all_static = False
        # unobserved nodes whose parents are all fixed: their Dst multiset
        # is the same in every row and is collected only once
        self._static_nodes: frozenset = frozenset()
        self._dst_cache: Dict[Term, list] = {}
        if not check_combination:
            self._precompute_static_weights()

    def _precompute_static_weights(self):
        """Evidence weights that cannot vary between rows.

        A node is deterministic when its only possible clause is a ground
        val fact and its parents are all fixed; an observed node whose
        parents are all observed or deterministic then has the same weight
        in every simulation, so it is weighed once up front."""
        parents = self.analysis.dag.parents
        observed = set(self.evidence)
        det = set()
        for t in self.analysis.dag.topological():
            if t in observed:
                continue
            if not all(p in observed or p in det for p in parents[t]):
                continue
            clauses = self.analysis.clauses_for(t)
            if all(isinstance(c.dist, ValExpr) and is_ground(c.head)
                   and is_ground(c.dist.term) for _, c in clauses):
                det.add(t)
        self._static_nodes = frozenset(
            t for t in self.analysis.dag.topo_rank
            if t not in observed
            and all(p in observed or p in det for p in parents[t]))
        scratch = SimulationState()
        rng = random.Random(0)
        fresh = FreshCounter()
        for e in self.residual_universe:
            if all(p in observed or p in det for p in parents[e]):
                self._static_weights[e] = self._weigh(e, scratch, rng, fresh)
        self._all_static = all(e in self._static_weights
                               for e in self.residual_universe)

    # ------------------------------------------------------------------
    def row(self, rng) -> WeightedRow:
        st = SimulationState()
        fresh = FreshCounter()
        ans = self.prove_marked(self.query_literals, st, rng, fresh)
        f = 1 if ans is not None else 0
        self.drain_forward(st, rng, fresh)
        natural = dict(st.w)
        assigned = frozenset(st.asg)
        if self._all_static:
            # residual weights are row-invariant; rows with the same
            # natural set share one filled dict
            key = frozenset(natural)
            filled = self._fill_cache.get(key)
            if filled is None:
                filled = {e: self._static_weights[e]
                          for e in self.residual_universe if e not in natural}
                self._fill_cache[key] = filled
        else:
            residual = [e for e in self.residual_universe if e not in natural]
            filled = self.weight_residuals(residual, st, rng, fresh)
        return WeightedRow(f=f, natural_weights=natural, filled_weights=filled,
                           assigned_pre_fill=assigned)

    def prove_marked(self, goal, st: SimulationState, rng,
                     fresh: FreshCounter) -> Optional[dict]:
        """First answer substitution for the goal, or None."""
        for theta in self.solve(tuple(goal), 0, {}, st, rng, fresh):
            return theta
        return None

    # -- sampling one RV ----------------------------------------------------
    def _value_of(self, t: Term, st: SimulationState, rng, fresh: FreshCounter):
        if t in self.evidence:
            return self.evidence[t]
        if t in st.top:
            return st.asg.get(t, _FAILED)
        if t in self._static_nodes:
            dsts = self._dst_cache.get(t)
            if dsts is None:
                dsts = self._collect_dst(t, st, rng, fresh)
                self._dst_cache[t] = dsts
        else:
            dsts = self._collect_dst(t, st, rng, fresh)
        st.dst[t] = dsts
        if not dsts:
            if self.strict:
                raise FoSamplerError("no clause fires for %r (empty Dst)" % (t,))
            v = UNDEFINED
        else:
            v = draw(combine(self.rule, dsts), rng)
        st.asg[t] = v
        st.top.add(t)
        st.push_forward(t)
        return v

    def _collect_dst(self, t: Term, st: SimulationState, rng,
                     fresh: FreshCounter) -> list:
        """Distributions from every derivation of every unifying clause.
        All derivations are enumerated before any sampling of t happens."""
        dsts = []
        fired_record = [] if self.check_combination else None
        for _, clause in self.analysis.clauses_for(t):
            if fired_record is None:
                compiled = self._compiled.get(id(clause))
                if compiled is None:
                    grounded = not any(True for _ in clause.variables())
                    compiled = (grounded,
                                eval_dist_expr(clause.dist) if grounded else None)
                    self._compiled[id(clause)] = compiled
                if compiled[0]:
                    # ground clause: no renaming, unification, or search
                    if clause.head == t and self._ground_body_holds(
                            clause.body, st, rng, fresh):
                        dsts.append(compiled[1])
                    continue
            rc = rename_apart(clause, fresh.next())
            sigma = unify(rc.head, t)
            if sigma is None:
                continue
            body = tuple(apply_literal(l, sigma) for l in rc.body)
            dist = apply_dist(rc.dist, sigma)
            fired_keys = set() if self.check_combination else None
            for sol in self.solve(body, 0, {}, st, rng, fresh):
                dsts.append(eval_dist_expr(apply_dist(dist, sol)))
                if fired_keys is not None:
                    fired_keys.add(_grounding_key(body, sol))
            if fired_record is not None:
                fired_record.append((body, fired_keys))
        if fired_record is not None:
            self._assert_combination(t, fired_record, st)
        return dsts

    def _ground_body_holds(self, body, st: SimulationState, rng,
                           fresh: FreshCounter) -> bool:
        """Body evaluation for fully ground clauses (constants only)."""
        in_dag = self.analysis.dag.topo_rank
        for lit in body:
            if isinstance(lit, Comparison):
                if not compare_values(lit.op, lit.lhs.value, lit.rhs.value):
                    return False
            elif isinstance(lit, ValueAtom):
                if lit.rv_term not in in_dag:
                    return False
                v = self._value_of(lit.rv_term, st, rng, fresh)
                if v is _FAILED:
                    return False
                if lit.positive:
                    if v is UNDEFINED or v != lit.value.value:
                        return False
                elif v is UNDEFINED or v == lit.value.value:
                    return False
            else:
                # aggregates and statistical atoms go through the solver
                for _ in self.solve((lit,), 0, {}, st, rng, fresh):
                    break
                else:
                    return False
        return True

    # -- forward pass ---------------------------------------------------
    def drain_forward(self, st: SimulationState, rng, fresh: FreshCounter):
        children = self.analysis.dag.children
        while st.forward:
            a = st.forward.popleft()
            st.bottom.add(a)
            for child in children[a]:
                if child in self.evidence:
                    if child not in st.top:
                        st.top.add(child)
                        w = self._static_weights.get(child)
                        st.w[child] = w if w is not None \
                            else self._weigh(child, st, rng, fresh)
                else:
                    st.push_forward(child)

    def _weigh(self, e: Term, st: SimulationState, rng,
               fresh: FreshCounter) -> float:
        dsts = self._collect_dst(e, st, rng, fresh)
        st.dst[e] = dsts
        if not dsts:
            if self.strict:
                raise FoSamplerError(
                    "observed %r has empty Dst (value undefined in this world)" % (e,))
            return NEG_INF
        return log_likelihood(combine(self.rule, dsts), self.evidence[e])

    # -- residual fill-ins -------------------------------------------------
    def weight_residuals(self, residuals, st: SimulationState, rng,
                         fresh: FreshCounter) -> Dict[Term, float]:
        out: Dict[Term, float] = {}
        for e in residuals:
            w = self._static_weights.get(e)
            out[e] = w if w is not None else self._weigh(e, st, rng, fresh)
        return out

    # -- combination-exclusivity assertion (test hook) -----------------------
    def _assert_combination(self, t: Term, fired_record, st: SimulationState):
        """Every grounding of every unifying clause either fired or has a
        body literal already false under the sampled context."""
        context = dict(self.evidence)
        context.update(st.asg)
        for body, fired_keys in fired_record:
            for grounding in self._enumerate_groundings(body):
                key = _grounding_key(body, grounding)
                if key in fired_keys:
                    continue
                # resolve value variables of positive atoms from the
                # context so guarding comparisons become decidable
                grounding = dict(grounding)
                for lit in body:
                    if isinstance(lit, ValueAtom) and lit.positive \
                            and isinstance(lit.value, Variable) \
                            and lit.value.name not in grounding:
                        t = apply_subst(lit.rv_term, grounding)
                        v = context.get(t)
                        if v is not None and v is not UNDEFINED:
                            grounding[lit.value.name] = value_to_term(v)
                lits = [apply_literal(l, grounding) for l in body]
                if not any(_decidably_false(l, context) for l in lits):
                    raise CombinationExclusivityError(
                        "grounding %r of a clause for %r neither fired nor "
                        "is excluded by the context" % (key, t))

    def _enumerate_groundings(self, body) -> Iterator[dict]:
        atoms = [l for l in body if isinstance(l, ValueAtom) and l.positive]

        def step(k, theta):
            if k == len(atoms):
                yield theta
                return
            pattern = apply_subst(atoms[k].rv_term, theta)
            for _, sigma in self.analysis.rv_groundings(pattern):
                theta2 = dict(theta)
                theta2.update(sigma)
                yield from step(k + 1, theta2)

        yield from step(0, {})


# ---------------------------------------------------------------------------

def eval_aggregate(name: str, values: List) -> object:
    if not values:
        raise FoSamplerError("aggregate over an empty multiset")
    if name == "cnt":
        return len(values)
    if name == "mode":
        counts: Dict[object, int] = {}
        for v in values:
            counts[repr(v)] = counts.get(repr(v), 0) + 1
        best = min(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        for v in values:
            if repr(v) == best[0]:
                return v
        raise AssertionError
    nums = []
    for v in values:
        if not isinstance(v, (int, float)):
            raise FoSamplerError("aggregate %s needs numbers, got %r" % (name, v))
        nums.append(v)
    if name == "avg":
        return sum(nums) / len(nums)
    if name == "sum":
        return sum(nums)
    if name == "max":
        return max(nums)
    if name == "min":
        return min(nums)
    raise FoSamplerError("unknown aggregate %r" % (name,))


def _comparison_operand(t: Term):
    if isinstance(t, Constant):
        return t.value
    raise FoSamplerError("comparison on unbound value %r" % (t,))


def _grounding_key(body, theta) -> tuple:
    return tuple(repr(apply_subst(l.rv_term, theta))
                 for l in body if isinstance(l, ValueAtom) and l.positive)


def _decidably_false(lit, context) -> bool:
    if isinstance(lit, Comparison):
        if isinstance(lit.lhs, Constant) and isinstance(lit.rhs, Constant):
            return not compare_values(lit.op, lit.lhs.value, lit.rhs.value)
        return False
    if isinstance(lit, ValueAtom) and is_ground(lit.rv_term) \
            and lit.rv_term in context:
        v = context[lit.rv_term]
        if isinstance(lit.value, Constant):
            holds = v is not UNDEFINED and v == lit.value.value
            return not holds if lit.positive else holds is True
        if isinstance(lit.value, Variable):
            if lit.positive:
                return v is UNDEFINED
            return v is not UNDEFINED
    return False
