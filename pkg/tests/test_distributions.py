"""Runtime distributions: combining rules, likelihoods, and sampling."""

import math
import random

import pytest

from dcsharp.distributions import (NEG_INF, UNDEFINED, Bernoulli, Discrete,
                                   DistributionError, Gaussian, MeanMixture,
                                   NoisyOrBernoulli, Single, Val, combine,
                                   draw, eval_dist_expr, likelihood,
                                   log_likelihood, logsumexp, support)
from dcsharp.parser import parse_program
from dcsharp.terms import Constant


def _gauss_pdf(x, mean, variance):
    return math.exp(-(x - mean) ** 2 / (2 * variance)) / \
        math.sqrt(2 * math.pi * variance)


# ---------------------------------------------------------------------------
# parameter validation

def test_parameter_validation():
    with pytest.raises(DistributionError):
        Bernoulli(1.5)
    with pytest.raises(DistributionError):
        Gaussian(0.0, 0.0)
    with pytest.raises(DistributionError):
        Discrete(((0.5, "a"), (0.4, "b")))     # mass 0.9
    with pytest.raises(DistributionError):
        Discrete(((-0.1, "a"), (1.1, "b")))


# ---------------------------------------------------------------------------
# combining rules

def test_combine_single():
    d = combine("mean", [Bernoulli(0.3)])
    assert isinstance(d, Single)
    assert likelihood(d, "t") == pytest.approx(0.3)


def test_mean_mixture_of_bernoullis():
    d = combine("mean", [Bernoulli(0.2), Bernoulli(0.6)])
    assert isinstance(d, MeanMixture)
    assert likelihood(d, "t") == pytest.approx(0.4)
    assert likelihood(d, "f") == pytest.approx(0.6)


def test_mean_mixture_density_of_gaussians():
    # [DERIVED] equal-weight mixture of two gaussian densities at 601.2,
    # the residual-evidence weight in the worked credit example
    d = combine("mean", [Gaussian(700, 10.9), Gaussian(600, 20.5)])
    want = 0.5 * (_gauss_pdf(601.2, 700, 10.9) + _gauss_pdf(601.2, 600, 20.5))
    assert likelihood(d, 601.2) == pytest.approx(want, abs=1e-15)
    assert want == pytest.approx(0.0425353362191502, abs=1e-12)


def test_mean_cannot_mix_kinds():
    with pytest.raises(DistributionError):
        combine("mean", [Bernoulli(0.5), Gaussian(0, 1)])


def test_noisyor_two_causes():
    # [TRIVIAL] 1 - (1-0.3)(1-0.01) = 0.307
    d = combine("noisyor", [Bernoulli(0.3), Bernoulli(0.01)])
    assert isinstance(d, NoisyOrBernoulli)
    assert d.p == pytest.approx(0.307)
    assert likelihood(d, "f") == pytest.approx(0.693)


def test_noisyor_requires_bernoullis():
    with pytest.raises(DistributionError):
        combine("noisyor", [Bernoulli(0.5), Gaussian(0, 1)])


def test_noisyor_stays_finite_under_many_causes():
    # the success probability underflows to 1.0 in plain floats here,
    # but the miss probability must remain usable in log space
    d = combine("noisyor", [Bernoulli(0.1)] * 400)
    assert d.p == 1.0                                   # rounds up in floats
    assert log_likelihood(d, "f") == pytest.approx(400 * math.log(0.9))
    assert log_likelihood(d, "t") == pytest.approx(0.0, abs=1e-12)


def test_noisyor_with_certain_cause():
    d = combine("noisyor", [Bernoulli(1.0), Bernoulli(0.2)])
    assert d.p == 1.0 and log_likelihood(d, "f") == NEG_INF


def test_unknown_rule():
    with pytest.raises(DistributionError):
        combine("median", [Bernoulli(0.5), Bernoulli(0.5)])


# ---------------------------------------------------------------------------
# likelihoods and support

def test_val_likelihood():
    d = Val("t")
    assert likelihood(d, "t") == 1.0 and likelihood(d, "f") == 0.0


def test_discrete_likelihood_merges_duplicate_values():
    d = Discrete(((0.3, "a"), (0.2, "a"), (0.5, "b")))
    assert likelihood(d, "a") == pytest.approx(0.5)


def test_gaussian_log_likelihood():
    d = Gaussian(650, 15.4)
    assert likelihood(d, 650.0) == pytest.approx(_gauss_pdf(650, 650, 15.4))
    with pytest.raises(DistributionError):
        log_likelihood(d, "t")


def test_likelihood_of_undefined_is_an_error():
    with pytest.raises(DistributionError):
        log_likelihood(Bernoulli(0.5), UNDEFINED)


def test_support_sums_to_one():
    for d in (Bernoulli(0.25), Discrete(((0.3, "a"), (0.7, "b"))),
              combine("mean", [Bernoulli(0.2), Discrete(((1.0, "t"),))]),
              combine("noisyor", [Bernoulli(0.3), Bernoulli(0.4)])):
        assert sum(p for _, p in support(d)) == pytest.approx(1.0)
    with pytest.raises(DistributionError):
        support(Gaussian(0, 1))


def test_logsumexp():
    xs = [math.log(0.2), math.log(0.3)]
    assert logsumexp(xs) == pytest.approx(math.log(0.5))
    assert logsumexp([NEG_INF, NEG_INF]) == NEG_INF


# ---------------------------------------------------------------------------
# sampling consistency

def test_draw_matches_mass():
    rng = random.Random(42)
    d = combine("mean", [Bernoulli(0.2), Bernoulli(0.6)])
    n = 20000
    hits = sum(draw(d, rng) == "t" for _ in range(n))
    assert hits / n == pytest.approx(0.4, abs=0.02)


def test_draw_gaussian_moments():
    rng = random.Random(7)
    xs = [draw(Gaussian(10.0, 4.0), rng) for _ in range(20000)]
    mean = sum(xs) / len(xs)
    var = sum((x - mean) ** 2 for x in xs) / len(xs)
    assert mean == pytest.approx(10.0, abs=0.1)
    assert var == pytest.approx(4.0, abs=0.2)


# ---------------------------------------------------------------------------
# expression evaluation

def test_eval_dist_expr():
    p = parse_program("a ~ discrete([0.3:x, 0.7:y]). b ~ gaussian(1,2).")
    d = eval_dist_expr(p.clauses[0].dist)
    assert isinstance(d, Discrete)
    g = eval_dist_expr(p.clauses[1].dist)
    assert g == Gaussian(1, 2)
    # memoized: the same expression returns the same object
    assert eval_dist_expr(p.clauses[0].dist) is d


def test_eval_dist_expr_rejects_unbound():
    p = parse_program("a ~ bernoulli(P) <- b ~= P.")
    with pytest.raises(DistributionError):
        eval_dist_expr(p.clauses[0].dist)
