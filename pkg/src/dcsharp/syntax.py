"""Abstract syntax of distributional-clause programs.

A program is an ordered list of clauses `Head ~ Dist <- Body.` where the
body mixes value atoms (`t ~= v`), comparisons, aggregates, and
statistical model atoms.  Clause order is significant: resolution tries
clauses in source order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from .terms import (Compound, Constant, Term, Variable, apply_subst,
                    format_constant, rename_term, variables_of)

COMPARISON_OPS = ("==", ">=", "=<", "<", ">")
AGGREGATE_NAMES = ("avg", "mode", "max", "min", "sum", "cnt")


# ---------------------------------------------------------------------------
# body literals

@dataclass(frozen=True)
class ValueAtom:
    rv_term: Term
    value: Term               # variable or constant
    positive: bool = True

    def __repr__(self):
        s = "%r ~= %r" % (self.rv_term, self.value)
        return s if self.positive else "\\+ " + s


@dataclass(frozen=True)
class Comparison:
    lhs: Term
    rhs: Term
    op: str                   # one of COMPARISON_OPS

    def __repr__(self):
        return "%r %s %r" % (self.lhs, self.op, self.rhs)


@dataclass(frozen=True)
class Aggregate:
    name: str                 # one of AGGREGATE_NAMES
    template: Term
    inner_goal: tuple         # tuple of body literals
    result: Variable
    positive: bool = True

    def __repr__(self):
        inner = ",".join(map(repr, self.inner_goal))
        s = "%s(%r,(%s),%r)" % (self.name, self.template, inner, self.result)
        return s if self.positive else "\\+ " + s


@dataclass(frozen=True)
class StatModel:
    kind: str                 # only "linear"
    inputs: tuple             # terms, bound to numbers at evaluation time
    params: tuple             # k weights then an intercept
    output: Variable

    def __repr__(self):
        ins = ",".join(map(repr, self.inputs))
        ps = ",".join(format_constant(p) for p in self.params)
        return "%s([%s],[%s],%r)" % (self.kind, ins, ps, self.output)


BodyLiteral = Union[ValueAtom, Comparison, Aggregate, StatModel]


# ---------------------------------------------------------------------------
# distribution expressions (syntactic; evaluated in distributions.py)

@dataclass(frozen=True)
class ValExpr:
    term: Term

    def __repr__(self):
        return "val(%r)" % (self.term,)


@dataclass(frozen=True)
class BernoulliExpr:
    p: Term                   # number constant or variable

    def __repr__(self):
        return "bernoulli(%r)" % (self.p,)


@dataclass(frozen=True)
class DiscreteExpr:
    entries: tuple            # of (prob: Term, value: Term)

    def __repr__(self):
        inner = ",".join("%r:%r" % (p, v) for p, v in self.entries)
        return "discrete([%s])" % inner


@dataclass(frozen=True)
class GaussianExpr:
    mean: Term
    variance: Term

    def __repr__(self):
        return "gaussian(%r,%r)" % (self.mean, self.variance)


DistExpr = Union[ValExpr, BernoulliExpr, DiscreteExpr, GaussianExpr]


# ---------------------------------------------------------------------------
# clauses and programs

@dataclass(frozen=True)
class DistributionalClause:
    head: Term
    dist: DistExpr
    body: tuple = ()

    def __repr__(self):
        s = "%r ~ %r" % (self.head, self.dist)
        if self.body:
            s += " <- " + ", ".join(map(repr, self.body))
        return s + "."

    def variables(self) -> Iterator[Variable]:
        yield from variables_of(self.head)
        yield from dist_variables(self.dist)
        for lit in self.body:
            yield from literal_variables(lit)


@dataclass(frozen=True)
class Program:
    clauses: tuple
    combining_rule: str = "mean"     # "mean" | "noisyor"

    def __repr__(self):
        return "\n".join(map(repr, self.clauses))

    def is_ground(self) -> bool:
        return not any(True for c in self.clauses for _ in c.variables())


# ---------------------------------------------------------------------------
# traversal helpers

def literal_variables(lit: BodyLiteral) -> Iterator[Variable]:
    if isinstance(lit, ValueAtom):
        yield from variables_of(lit.rv_term)
        yield from variables_of(lit.value)
    elif isinstance(lit, Comparison):
        yield from variables_of(lit.lhs)
        yield from variables_of(lit.rhs)
    elif isinstance(lit, Aggregate):
        yield from variables_of(lit.template)
        for inner in lit.inner_goal:
            yield from literal_variables(inner)
        yield lit.result
    elif isinstance(lit, StatModel):
        for t in lit.inputs:
            yield from variables_of(t)
        yield lit.output
    else:
        raise TypeError(lit)


def dist_variables(d: DistExpr) -> Iterator[Variable]:
    if isinstance(d, ValExpr):
        yield from variables_of(d.term)
    elif isinstance(d, BernoulliExpr):
        yield from variables_of(d.p)
    elif isinstance(d, DiscreteExpr):
        for p, v in d.entries:
            yield from variables_of(p)
            yield from variables_of(v)
    elif isinstance(d, GaussianExpr):
        yield from variables_of(d.mean)
        yield from variables_of(d.variance)
    else:
        raise TypeError(d)


def apply_literal(lit: BodyLiteral, theta: dict) -> BodyLiteral:
    if not theta:
        return lit
    if isinstance(lit, ValueAtom):
        return ValueAtom(apply_subst(lit.rv_term, theta),
                         apply_subst(lit.value, theta), lit.positive)
    if isinstance(lit, Comparison):
        return Comparison(apply_subst(lit.lhs, theta),
                          apply_subst(lit.rhs, theta), lit.op)
    if isinstance(lit, Aggregate):
        res = theta.get(lit.result.name, lit.result)
        return Aggregate(lit.name, apply_subst(lit.template, theta),
                         tuple(apply_literal(l, theta) for l in lit.inner_goal),
                         res, lit.positive)
    if isinstance(lit, StatModel):
        out = theta.get(lit.output.name, lit.output)
        return StatModel(lit.kind,
                         tuple(apply_subst(t, theta) for t in lit.inputs),
                         lit.params, out)
    raise TypeError(lit)


def apply_dist(d: DistExpr, theta: dict) -> DistExpr:
    if not theta:
        return d
    if isinstance(d, ValExpr):
        return ValExpr(apply_subst(d.term, theta))
    if isinstance(d, BernoulliExpr):
        return BernoulliExpr(apply_subst(d.p, theta))
    if isinstance(d, DiscreteExpr):
        return DiscreteExpr(tuple((apply_subst(p, theta), apply_subst(v, theta))
                                  for p, v in d.entries))
    if isinstance(d, GaussianExpr):
        return GaussianExpr(apply_subst(d.mean, theta),
                            apply_subst(d.variance, theta))
    raise TypeError(d)


def apply_clause(c: DistributionalClause, theta: dict) -> DistributionalClause:
    if not theta:
        return c
    return DistributionalClause(apply_subst(c.head, theta),
                                apply_dist(c.dist, theta),
                                tuple(apply_literal(l, theta) for l in c.body))


def rename_apart(c: DistributionalClause, fresh_index: int) -> DistributionalClause:
    """Rename every variable in the clause with a fresh numeric suffix."""
    theta = {v.name: rename_term(v, fresh_index)
             for v in set(c.variables())}
    return apply_clause(c, theta)


def canonical_clause(head, body) -> tuple:
    """Key for deduplicating definite clauses up to variable renaming."""
    mapping: dict = {}

    def canon(t):
        if isinstance(t, Variable):
            if t.name not in mapping:
                mapping[t.name] = Variable("V%d" % len(mapping))
            return mapping[t.name]
        if isinstance(t, Compound):
            return Compound(t.functor, tuple(canon(a) for a in t.args))
        return t

    return (canon(head), tuple(canon(b) for b in body))
