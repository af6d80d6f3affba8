"""Static analysis: RV set, dependency set, least models, ground DAG.

The RV set of a program is a definite logic program over rv/1 whose
least Herbrand model names exactly the random variables the program
defines.  The dependency set adds pa/2 clauses whose least model names
every direct-influence edge.  Both models are computed bottom-up by
semi-naive iteration and kept as immutable tables, and the ground
dependency DAG (with a topological rank) is extracted from them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Set, Tuple

from .syntax import (Aggregate, DistributionalClause, Program, StatModel,
                     ValueAtom, canonical_clause, literal_variables)
from .terms import (Compound, Constant, Term, Variable, apply_subst,
                    is_ground, rename_term, unify, variables_of)


class AnalysisError(Exception):
    pass


class CycleError(AnalysisError):
    def __init__(self, cycle):
        self.cycle = tuple(cycle)
        super().__init__("cyclic dependency: " +
                         " -> ".join(repr(t) for t in self.cycle))


class StratificationError(AnalysisError):
    pass


# ---------------------------------------------------------------------------
# definite programs over rv/1 and pa/2

@dataclass(frozen=True)
class DefiniteProgram:
    clauses: Tuple[Tuple[Term, Tuple[Term, ...]], ...]

    def __repr__(self):
        lines = []
        for head, body in self.clauses:
            if body:
                lines.append("%r <- %s." % (head, ", ".join(map(repr, body))))
            else:
                lines.append("%r." % (head,))
        return "\n".join(lines)


def _rv(t: Term) -> Term:
    return Compound("rv", (t,))


def _pa(child: Term, parent: Term) -> Term:
    return Compound("pa", (child, parent))


def _top_level_rv_terms(clause: DistributionalClause) -> List[Term]:
    """RV terms of top-level value atoms, both polarities, in order."""
    return [lit.rv_term for lit in clause.body if isinstance(lit, ValueAtom)]


def rv_set(p: Program) -> DefiniteProgram:
    """One definite clause per distributional clause; comparison,
    aggregate, and statistical atoms contribute nothing here."""
    out, seen = [], set()
    for clause in p.clauses:
        head = _rv(clause.head)
        body = tuple(_rv(t) for t in _top_level_rv_terms(clause))
        key = canonical_clause(head, body)
        if key not in seen:
            seen.add(key)
            out.append((head, body))
    return DefiniteProgram(tuple(out))


def dependency_set(p: Program) -> DefiniteProgram:
    """rv_set plus pa/2 clauses.  Aggregate inner goals contribute
    pa-clauses with their free variables renamed apart."""
    rvp = rv_set(p)
    out = list(rvp.clauses)
    seen = {canonical_clause(h, b) for h, b in out}

    def add(head, body):
        key = canonical_clause(head, body)
        if key not in seen:
            seen.add(key)
            out.append((head, body))

    for head, body in rvp.clauses:
        for parent_atom in body:
            add(_pa(head.args[0], parent_atom.args[0]), (head,) + body)

    fresh = 0
    for clause in p.clauses:
        outer_terms = _top_level_rv_terms(clause)
        outer_vars = {v.name for v in variables_of(clause.head)}
        for t in outer_terms:
            outer_vars.update(v.name for v in variables_of(t))
        for lit in clause.body:
            if not isinstance(lit, Aggregate):
                continue
            inner_terms = [l.rv_term for l in lit.inner_goal
                           if isinstance(l, ValueAtom)]
            fresh += 1
            theta = {}
            for t in inner_terms:
                for v in variables_of(t):
                    if v.name not in outer_vars and v.name not in theta:
                        theta[v.name] = rename_term(v, fresh)
            renamed = [apply_subst(t, theta) for t in inner_terms]
            ctx = (_rv(clause.head),) + tuple(_rv(t) for t in outer_terms) \
                  + tuple(_rv(t) for t in renamed)
            for rt in renamed:
                add(_pa(clause.head, rt), ctx)
    return DefiniteProgram(tuple(out))


# ---------------------------------------------------------------------------
# least Herbrand model, semi-naive

class LeastModel:
    """Immutable least Herbrand model of a definite program, with an
    index for pattern enumeration."""

    def __init__(self, dp: DefiniteProgram):
        self.atoms: Set[Term] = set()
        self._index: Dict[tuple, List[Term]] = {}
        self._compute(dp)
        for key in self._index:
            self._index[key].sort(key=repr)

    # -- construction ---------------------------------------------------
    def _compute(self, dp: DefiniteProgram):
        rules = []
        delta = set()
        for head, body in dp.clauses:
            if body:
                rules.append((head, body))
            elif is_ground(head):
                delta.add(head)
            else:
                raise AnalysisError("non-ground fact %r" % (head,))
        for a in delta:
            self._add(a)
        while delta:
            new = set()
            for head, body in rules:
                for i in range(len(body)):
                    for theta in self._join(body, i, delta):
                        h = apply_subst(head, theta)
                        if is_ground(h) and h not in self.atoms:
                            new.add(h)
            for a in new:
                self._add(a)
            delta = new

    def _add(self, atom: Term):
        self.atoms.add(atom)
        self._index.setdefault(_atom_key(atom), []).append(atom)

    def _join(self, body, pivot, delta):
        """All substitutions grounding the body with atom `pivot` matched
        against the newest facts and the rest against the whole model."""

        def step(k, theta):
            if k == len(body):
                yield theta
                return
            atom = apply_subst(body[k], theta)
            pool = delta if k == pivot else self.atoms
            for cand in self._candidates(atom, pool, k == pivot):
                theta2 = unify(atom, cand, theta)
                if theta2 is not None:
                    yield from step(k + 1, theta2)

        yield from step(0, {})

    def _candidates(self, atom: Term, pool, from_delta: bool):
        if is_ground(atom):
            return (atom,) if atom in pool else ()
        if from_delta:
            return [a for a in pool if _atom_key_compatible(atom, a)]
        key = _atom_key(atom)
        if key is not None:
            return self._index.get(key, ())
        return [a for a in pool if _atom_key_compatible(atom, a)]

    # -- queries ----------------------------------------------------------
    def entails(self, atom: Term) -> bool:
        if is_ground(atom):
            return atom in self.atoms
        return any(True for _ in self.enumerate(atom))

    def enumerate(self, pattern: Term):
        """Ground model atoms matching the pattern, with their unifier,
        in deterministic term order."""
        key = _atom_key(pattern)
        pool = self._index.get(key, ()) if key is not None else \
            sorted(self.atoms, key=repr)
        for atom in pool:
            theta = unify(pattern, atom)
            if theta is not None:
                yield atom, theta

    def ground_instances(self, pattern: Term) -> List[Term]:
        return [a for a, _ in self.enumerate(pattern)]


def _atom_key(atom: Term) -> Optional[tuple]:
    """Index key: predicate plus the shape of the first argument, when
    that shape is fixed."""
    if isinstance(atom, Constant):
        return ("const", atom.value)
    if not isinstance(atom, Compound):
        return None
    first = atom.args[0]
    if isinstance(first, Compound):
        return (atom.functor, len(atom.args), first.functor, len(first.args))
    if isinstance(first, Constant):
        return (atom.functor, len(atom.args), "const", first.value)
    return None


def _atom_key_compatible(pattern: Term, atom: Term) -> bool:
    if isinstance(pattern, Variable):
        return True
    if isinstance(pattern, Constant):
        return pattern == atom
    if not isinstance(atom, Compound) or atom.functor != pattern.functor \
            or len(atom.args) != len(pattern.args):
        return False
    first_p, first_a = pattern.args[0], atom.args[0]
    if isinstance(first_p, Compound):
        return isinstance(first_a, Compound) and first_a.functor == first_p.functor \
            and len(first_a.args) == len(first_p.args)
    if isinstance(first_p, Constant):
        return first_p == first_a
    return True


def entails(dp: DefiniteProgram, query: Term) -> bool:
    return LeastModel(dp).entails(query)


def enumerate_model(dp: DefiniteProgram, pattern: Term):
    return list(LeastModel(dp).enumerate(pattern))


# ---------------------------------------------------------------------------
# ground dependency DAG

@dataclass
class GroundDependencyDag:
    nodes: Tuple[Term, ...]
    parents: Dict[Term, Tuple[Term, ...]]
    children: Dict[Term, Tuple[Term, ...]]
    topo_rank: Dict[Term, int]

    def topological(self) -> List[Term]:
        return sorted(self.nodes, key=lambda t: self.topo_rank[t])

    def ancestors(self, seeds: Iterable[Term]) -> Set[Term]:
        out: Set[Term] = set()
        stack = list(seeds)
        while stack:
            t = stack.pop()
            if t in out:
                continue
            out.add(t)
            stack.extend(self.parents.get(t, ()))
        return out


def ground_dag(rv_model: LeastModel, dep_model: LeastModel) -> GroundDependencyDag:
    nodes = sorted((a.args[0] for a in rv_model.atoms), key=repr)
    if not nodes:
        raise AnalysisError("program defines no RVs (empty RV set)")
    node_set = set(nodes)
    parents: Dict[Term, List[Term]] = {t: [] for t in nodes}
    children: Dict[Term, List[Term]] = {t: [] for t in nodes}
    for atom in dep_model.atoms:
        if not (isinstance(atom, Compound) and atom.functor == "pa"):
            continue
        child, parent = atom.args
        if child in node_set and parent in node_set:
            parents[child].append(parent)
            children[parent].append(child)
    for t in nodes:
        parents[t] = tuple(sorted(set(parents[t]), key=repr))
        children[t] = tuple(sorted(set(children[t]), key=repr))

    # Kahn's algorithm; any leftover nodes witness a cycle.
    indeg = {t: len(parents[t]) for t in nodes}
    ready = sorted((t for t in nodes if indeg[t] == 0), key=repr)
    rank: Dict[Term, int] = {}
    while ready:
        t = ready.pop(0)
        rank[t] = len(rank)
        for c in children[t]:
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
        ready.sort(key=repr)
    if len(rank) != len(nodes):
        stuck = [t for t in nodes if t not in rank]
        raise CycleError(_find_cycle(stuck, parents))
    return GroundDependencyDag(tuple(nodes),
                               {t: parents[t] for t in nodes},
                               {t: children[t] for t in nodes},
                               rank)


def _find_cycle(stuck, parents):
    start = stuck[0]
    seen, path = {}, []
    t = start
    while t not in seen:
        seen[t] = len(path)
        path.append(t)
        nxt = [p for p in parents[t] if p in set(stuck)]
        if not nxt:
            return path
        t = nxt[0]
    return path[seen[t]:] + [t]


# ---------------------------------------------------------------------------
# negation stratification (predicate level)

def check_stratification(p: Program):
    """Reject programs where an RV's definition depends negatively on
    itself through any clause chain.  Aggregate inner goals are treated
    like negative dependencies: all their answers must be fixed before
    the aggregate is evaluated."""
    pos_edges: Dict[tuple, Set[tuple]] = {}
    neg_edges: Dict[tuple, Set[tuple]] = {}

    def pred(t: Term) -> tuple:
        if isinstance(t, Compound):
            return (t.functor, len(t.args))
        if isinstance(t, Constant):
            return (str(t.value), 0)
        raise AnalysisError("clause head is a variable")

    def walk(head_pred, lits, under_neg):
        for lit in lits:
            if isinstance(lit, ValueAtom):
                target = neg_edges if (under_neg or not lit.positive) else pos_edges
                target.setdefault(head_pred, set()).add(pred(lit.rv_term))
            elif isinstance(lit, Aggregate):
                walk(head_pred, lit.inner_goal, True)

    for clause in p.clauses:
        walk(pred(clause.head), clause.body, False)

    def reaches(src, dst) -> bool:
        seen, stack = set(), [src]
        while stack:
            q = stack.pop()
            if q == dst:
                return True
            if q in seen:
                continue
            seen.add(q)
            stack.extend(pos_edges.get(q, ()))
            stack.extend(neg_edges.get(q, ()))
        return False

    for p_from, targets in neg_edges.items():
        for q in targets:
            if q == p_from or reaches(q, p_from):
                raise StratificationError(
                    "predicate %s/%d depends negatively on itself" % p_from)


# ---------------------------------------------------------------------------
# bundled per-program analysis

class ProgramAnalysis:
    """Everything the samplers need, computed once per program."""

    def __init__(self, program: Program):
        check_stratification(program)
        self.program = program
        self.rv_program = rv_set(program)
        self.dep_program = dependency_set(program)
        self.rv_model = LeastModel(self.rv_program)
        self.dep_model = LeastModel(DefiniteProgram(self.dep_program.clauses))
        self.dag = ground_dag(self.rv_model, self.dep_model)
        # clauses indexed by head predicate for fast unification candidates
        self.clauses_by_pred: Dict[tuple, List[Tuple[int, DistributionalClause]]] = {}
        for i, c in enumerate(program.clauses):
            self.clauses_by_pred.setdefault(_head_key(c.head), []).append((i, c))
        self._grounding_cache: Dict[Term, tuple] = {}

    def clauses_for(self, rv_term: Term):
        return self.clauses_by_pred.get(_head_key(rv_term), ())

    def rv_groundings(self, pattern: Term):
        """Ground RVs matching the pattern, with unifiers, in
        deterministic order (the grounding-substitution choice points).
        The RV model is static, so results are memoized per pattern."""
        hit = self._grounding_cache.get(pattern)
        if hit is None:
            hit = tuple(self.rv_model.enumerate(_rv(pattern)))
        if len(self._grounding_cache) < 100000:
            self._grounding_cache[pattern] = hit
        return hit


def _head_key(t: Term) -> tuple:
    if isinstance(t, Compound):
        return (t.functor, len(t.args))
    if isinstance(t, Constant):
        return (str(t.value), 0)
    raise AnalysisError("RV term is a variable")
