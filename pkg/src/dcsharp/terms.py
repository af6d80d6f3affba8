"""Logical terms, substitutions and most-general unification.

Terms are immutable values: a Variable, a Constant (symbolic or numeric),
or a Compound term f(t1, ..., tn).  Substitutions map variable names to
terms and are kept idempotent (fully resolved) so applying one twice is
the same as applying it once.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Union


@dataclass(frozen=True)
class Variable:
    name: str

    def __repr__(self):
        return self.name

    def __hash__(self):
        return hash(self.name)


@dataclass(frozen=True)
class Constant:
    # payload is a symbol (str), an int, or a float
    value: Union[str, int, float]

    def __repr__(self):
        return format_constant(self.value)

    def __hash__(self):
        return hash(self.value)


@dataclass(frozen=True)
class Compound:
    functor: str
    args: tuple

    def __post_init__(self):
        if not self.functor:
            raise ValueError("compound functor must be nonempty")
        if len(self.args) < 1:
            raise ValueError("compound arity must be >= 1")

    def __repr__(self):
        return "%s(%s)" % (self.functor, ",".join(map(repr, self.args)))

    def __hash__(self):
        # terms are immutable and hashed constantly; cache the hash
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((self.functor, self.args))
            object.__setattr__(self, "_hash", h)
        return h


Term = Union[Variable, Constant, Compound]

# Canonical truth constants used by bernoulli distributions.
TRUE = Constant("t")
FALSE = Constant("f")


def format_constant(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def is_ground(t: Term) -> bool:
    if isinstance(t, Variable):
        return False
    if isinstance(t, Compound):
        return all(is_ground(a) for a in t.args)
    return True


def variables_of(t: Term) -> Iterator[Variable]:
    if isinstance(t, Variable):
        yield t
    elif isinstance(t, Compound):
        for a in t.args:
            yield from variables_of(a)


def occurs_in(name: str, t: Term) -> bool:
    if isinstance(t, Variable):
        return t.name == name
    if isinstance(t, Compound):
        return any(occurs_in(name, a) for a in t.args)
    return False


def apply_subst(t: Term, theta: dict) -> Term:
    """Instantiate a term under a {name: Term} binding map."""
    if isinstance(t, Variable):
        return theta.get(t.name, t)
    if isinstance(t, Compound):
        if not theta:
            return t
        return Compound(t.functor, tuple(apply_subst(a, theta) for a in t.args))
    return t


def compose(theta: dict, sigma: dict) -> dict:
    """Composition: apply(t, compose(theta, sigma)) == apply(apply(t, theta), sigma)."""
    out = {name: apply_subst(t, sigma) for name, t in theta.items()}
    for name, t in sigma.items():
        if name not in theta:
            out[name] = t
    return out


def unify(a: Term, b: Term, theta: Optional[dict] = None) -> Optional[dict]:
    """Most general unifier of two terms, or None.

    The returned map is idempotent and passes the occurs-check.  An
    existing binding map may be supplied and is treated as already
    applied; it is not mutated.
    """
    theta = dict(theta) if theta else {}
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        x = _walk(x, theta)
        y = _walk(y, theta)
        if x is y or x == y:
            continue
        if isinstance(x, Variable):
            if occurs_in(x.name, _resolve(y, theta)):
                return None
            theta[x.name] = y
        elif isinstance(y, Variable):
            if occurs_in(y.name, _resolve(x, theta)):
                return None
            theta[y.name] = x
        elif isinstance(x, Compound) and isinstance(y, Compound):
            if x.functor != y.functor or len(x.args) != len(y.args):
                return None
            stack.extend(zip(x.args, y.args))
        else:
            return None
    # resolve to an idempotent map
    return {name: _resolve(t, theta) for name, t in theta.items()}


def _walk(t: Term, theta: dict) -> Term:
    while isinstance(t, Variable) and t.name in theta:
        t = theta[t.name]
    return t


def _resolve(t: Term, theta: dict) -> Term:
    t = _walk(t, theta)
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(_resolve(a, theta) for a in t.args))
    return t


def rename_term(t: Term, index: int) -> Term:
    """Suffix every variable with a fresh numeric index."""
    if isinstance(t, Variable):
        return Variable("%s_%d" % (t.name, index))
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(rename_term(a, index) for a in t.args))
    return t


class FreshCounter:
    """Per-derivation counter handing out renaming indices."""

    def __init__(self, start: int = 0):
        self.value = start

    def next(self) -> int:
        self.value += 1
        return self.value
