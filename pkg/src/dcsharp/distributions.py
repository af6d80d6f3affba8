"""Runtime distributions, sampling, likelihoods, and combining rules.

Likelihoods are computed in log-space everywhere; densities and masses
only leave log-space at the reporting boundary.  Discrete values are
plain Python payloads (symbol string, int, or float); `t` and `f` are
the canonical bernoulli outcomes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

from .syntax import (BernoulliExpr, DiscreteExpr, DistExpr, GaussianExpr,
                     ValExpr)
from .terms import Compound, Constant, Term, Variable

NEG_INF = float("-inf")
LOG_2PI = math.log(2.0 * math.pi)


class DistributionError(Exception):
    pass


class _Undefined:
    """The out-of-support value an RV takes when no clause fires."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "undefined"


UNDEFINED = _Undefined()

# a sampled value: scalar payload or a compound term (from val/1)
Value = Union[str, int, float, Compound, _Undefined]


def value_to_term(v: Value) -> Term:
    if isinstance(v, Compound):
        return v
    if v is UNDEFINED:
        raise DistributionError("undefined has no term form")
    return Constant(v)


# ---------------------------------------------------------------------------
# base distributions

@dataclass(frozen=True)
class Val:
    value: Value


@dataclass(frozen=True)
class Bernoulli:
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise DistributionError("bernoulli parameter %r outside [0,1]" % (self.p,))


@dataclass(frozen=True)
class Discrete:
    entries: Tuple[Tuple[float, Value], ...]

    def __post_init__(self):
        total = 0.0
        for p, _ in self.entries:
            if p < 0:
                raise DistributionError("negative discrete probability %r" % (p,))
            total += p
        if abs(total - 1.0) > 1e-9:
            raise DistributionError("discrete probabilities sum to %r, not 1" % (total,))


@dataclass(frozen=True)
class Gaussian:
    mean: float
    variance: float

    def __post_init__(self):
        if not self.variance > 0:
            raise DistributionError("gaussian variance must be positive, got %r"
                                    % (self.variance,))


Distribution = Union[Val, Bernoulli, Discrete, Gaussian]


# ---------------------------------------------------------------------------
# combined distributions

@dataclass(frozen=True)
class Single:
    component: Distribution


@dataclass(frozen=True)
class MeanMixture:
    components: Tuple[Distribution, ...]


@dataclass(frozen=True)
class NoisyOrBernoulli:
    # kept in log space: log of the all-causes-miss probability, i.e.
    # log prod(1 - p_i); the success probability underflows to 1.0 in
    # plain floats once enough causes combine
    log_miss: float

    @property
    def p(self) -> float:
        return -math.expm1(self.log_miss) if self.log_miss > NEG_INF else 1.0


CombinedDistribution = Union[Single, MeanMixture, NoisyOrBernoulli]

TRUE_VALUE = "t"
FALSE_VALUE = "f"


def is_continuous(d: Distribution) -> bool:
    return isinstance(d, Gaussian)


def combine(rule: str, ds: Sequence[Distribution]) -> CombinedDistribution:
    """Collapse the multiset of distributions one RV receives into one."""
    ds = list(ds)
    if not ds:
        raise DistributionError("cannot combine an empty multiset")
    if len(ds) == 1:
        return Single(ds[0])
    if rule == "noisyor":
        log_miss = 0.0
        for d in ds:
            if isinstance(d, NoisyOrBernoulli):
                log_miss += d.log_miss
            elif isinstance(d, Bernoulli):
                log_miss += math.log1p(-d.p) if d.p < 1.0 else NEG_INF
            else:
                raise DistributionError("noisy-or requires bernoulli components, got %r" % (d,))
        return NoisyOrBernoulli(log_miss)
    if rule == "mean":
        kinds = {is_continuous(d) for d in ds}
        if len(kinds) > 1:
            raise DistributionError(
                "mean combining rule cannot mix discrete and continuous distributions")
        return MeanMixture(tuple(ds))
    raise DistributionError("unknown combining rule %r" % (rule,))


# ---------------------------------------------------------------------------
# sampling

def draw(d, rng) -> Value:
    if isinstance(d, Single):
        return draw(d.component, rng)
    if isinstance(d, Val):
        return d.value
    if isinstance(d, Bernoulli):
        return TRUE_VALUE if rng.random() < d.p else FALSE_VALUE
    if isinstance(d, NoisyOrBernoulli):
        return TRUE_VALUE if rng.random() < d.p else FALSE_VALUE
    if isinstance(d, Discrete):
        u = rng.random()
        acc = 0.0
        for p, v in d.entries:
            acc += p
            if u < acc:
                return v
        return d.entries[-1][1]
    if isinstance(d, Gaussian):
        return rng.gauss(d.mean, math.sqrt(d.variance))
    if isinstance(d, MeanMixture):
        k = rng.randrange(len(d.components))
        return draw(d.components[k], rng)
    raise DistributionError("cannot draw from %r" % (d,))


# ---------------------------------------------------------------------------
# likelihoods

def log_likelihood(d, v: Value) -> float:
    """Log pmf (discrete) or log pdf (continuous) of v under d."""
    if v is UNDEFINED:
        raise DistributionError("likelihood of undefined is not a number")
    if isinstance(d, Single):
        return log_likelihood(d.component, v)
    if isinstance(d, Val):
        return 0.0 if d.value == v else NEG_INF
    if isinstance(d, NoisyOrBernoulli):
        if v == TRUE_VALUE:
            return math.log(d.p) if d.p > 0 else NEG_INF
        if v == FALSE_VALUE:
            return d.log_miss
        return NEG_INF
    if isinstance(d, Bernoulli):
        if v == TRUE_VALUE:
            return math.log(d.p) if d.p > 0 else NEG_INF
        if v == FALSE_VALUE:
            return math.log(1.0 - d.p) if d.p < 1 else NEG_INF
        return NEG_INF
    if isinstance(d, Discrete):
        mass = 0.0
        for p, val in d.entries:
            if val == v:
                mass += p
        return math.log(mass) if mass > 0 else NEG_INF
    if isinstance(d, Gaussian):
        if not isinstance(v, (int, float)):
            raise DistributionError("continuous distribution probed with %r" % (v,))
        dev = (v - d.mean) ** 2 / d.variance
        return -0.5 * (dev + LOG_2PI + math.log(d.variance))
    if isinstance(d, MeanMixture):
        parts = [log_likelihood(c, v) for c in d.components]
        return logsumexp(parts) - math.log(len(d.components))
    raise DistributionError("cannot evaluate likelihood under %r" % (d,))


def likelihood(d, v: Value) -> float:
    ll = log_likelihood(d, v)
    return math.exp(ll) if ll > NEG_INF else 0.0


def logsumexp(xs: Sequence[float]) -> float:
    m = max(xs)
    if m == NEG_INF:
        return NEG_INF
    return m + math.log(sum(math.exp(x - m) for x in xs))


# ---------------------------------------------------------------------------
# discrete support (oracle machinery)

def support(d) -> List[Tuple[Value, float]]:
    """Value/probability pairs for discrete-typed distributions."""
    if isinstance(d, Single):
        return support(d.component)
    if isinstance(d, Val):
        return [(d.value, 1.0)]
    if isinstance(d, NoisyOrBernoulli):
        miss = math.exp(d.log_miss) if d.log_miss > NEG_INF else 0.0
        return [(TRUE_VALUE, d.p), (FALSE_VALUE, miss)]
    if isinstance(d, Bernoulli):
        return [(TRUE_VALUE, d.p), (FALSE_VALUE, 1.0 - d.p)]
    if isinstance(d, Discrete):
        merged: dict = {}
        for p, v in d.entries:
            merged[v] = merged.get(v, 0.0) + p
        return list(merged.items())
    if isinstance(d, MeanMixture):
        merged = {}
        w = 1.0 / len(d.components)
        for c in d.components:
            for v, p in support(c):
                merged[v] = merged.get(v, 0.0) + w * p
        return list(merged.items())
    raise DistributionError("%r has no finite support" % (d,))


# ---------------------------------------------------------------------------
# evaluation of syntactic distribution expressions

_EXPR_CACHE: dict = {}


def eval_dist_expr(expr: DistExpr) -> Distribution:
    """Turn a fully instantiated distribution expression into a runtime
    distribution.  Raises if parameters are still unbound.  Expressions
    and distributions are immutable, so results are memoized."""
    hit = _EXPR_CACHE.get(expr)
    if hit is not None:
        return hit
    d = _eval_dist_expr(expr)
    if len(_EXPR_CACHE) < 100000:
        _EXPR_CACHE[expr] = d
    return d


def _eval_dist_expr(expr: DistExpr) -> Distribution:
    if isinstance(expr, ValExpr):
        return Val(_term_value(expr.term))
    if isinstance(expr, BernoulliExpr):
        return Bernoulli(_number(expr.p))
    if isinstance(expr, GaussianExpr):
        return Gaussian(_number(expr.mean), _number(expr.variance))
    if isinstance(expr, DiscreteExpr):
        return Discrete(tuple((_number(p), _term_value(v)) for p, v in expr.entries))
    raise DistributionError("unknown distribution expression %r" % (expr,))


def _number(t: Term) -> float:
    if isinstance(t, Constant) and isinstance(t.value, (int, float)):
        return t.value
    if isinstance(t, Variable):
        raise DistributionError("distribution parameter %r is unbound" % (t,))
    raise DistributionError("distribution parameter %r is not a number" % (t,))


def _term_value(t: Term) -> Value:
    if isinstance(t, Constant):
        return t.value
    if isinstance(t, Compound):
        return t
    raise DistributionError("distribution value %r is unbound" % (t,))
