"""Unification and substitution laws, checked on random terms."""

import pytest
from hypothesis import given, strategies as st

from dcsharp.terms import (Compound, Constant, Variable, apply_subst, compose,
                           is_ground, occurs_in, rename_term, unify,
                           variables_of)

# ---------------------------------------------------------------------------
# random term generation

_names = st.sampled_from(["f", "g", "h"])
_consts = st.sampled_from([Constant("a"), Constant("b"), Constant(1),
                           Constant(2.5)])
_vars = st.sampled_from([Variable("X"), Variable("Y"), Variable("Z")])


def _terms(depth=2):
    if depth == 0:
        return st.one_of(_consts, _vars)
    sub = _terms(depth - 1)
    return st.one_of(
        _consts, _vars,
        st.builds(Compound, _names, st.tuples(sub)),
        st.builds(Compound, _names, st.tuples(sub, sub)))


terms = _terms()


# ---------------------------------------------------------------------------
# basic term behaviour

def test_term_equality_and_hash():
    # [TRIVIAL] structural equality
    a = Compound("f", (Variable("X"), Constant(1)))
    b = Compound("f", (Variable("X"), Constant(1)))
    assert a == b and hash(a) == hash(b)
    assert a != Compound("f", (Variable("Y"), Constant(1)))
    assert Constant(1) != Constant("1")


def test_compound_requires_args():
    with pytest.raises(ValueError):
        Compound("f", ())


def test_variables_and_groundness():
    t = Compound("f", (Variable("X"), Compound("g", (Constant("a"),))))
    assert [v.name for v in variables_of(t)] == ["X"]
    assert not is_ground(t)
    assert is_ground(apply_subst(t, {"X": Constant(3)}))
    assert occurs_in("X", t) and not occurs_in("Y", t)


def test_rename_term_is_injective_on_variables():
    t = Compound("f", (Variable("X"), Variable("Y")))
    r = rename_term(t, 7)
    assert {v.name for v in variables_of(r)} == {"X_7", "Y_7"}


# ---------------------------------------------------------------------------
# unification laws

@given(terms)
def test_unify_reflexive(t):
    assert unify(t, t) == {}


@given(terms, terms)
def test_unify_symmetric_in_success(a, b):
    assert (unify(a, b) is None) == (unify(b, a) is None)


@given(terms, terms)
def test_unifier_actually_unifies(a, b):
    theta = unify(a, b)
    if theta is not None:
        assert apply_subst(a, theta) == apply_subst(b, theta)


@given(terms, terms)
def test_unifier_is_idempotent(a, b):
    theta = unify(a, b)
    if theta is not None:
        for t in theta.values():
            assert apply_subst(t, theta) == t


@given(terms)
def test_apply_empty_subst_is_identity(t):
    assert apply_subst(t, {}) == t


def test_occurs_check():
    x = Variable("X")
    assert unify(x, Compound("f", (x,))) is None


def test_unify_under_existing_bindings():
    theta = unify(Variable("X"), Constant("a"))
    assert unify(Variable("X"), Constant("b"), theta) is None
    assert unify(Variable("X"), Constant("a"), theta) == theta


def test_functor_and_arity_clash():
    assert unify(Compound("f", (Constant(1),)),
                 Compound("g", (Constant(1),))) is None
    assert unify(Compound("f", (Constant(1),)),
                 Compound("f", (Constant(1), Constant(2)))) is None


# ---------------------------------------------------------------------------
# substitution composition

@given(terms)
def test_compose_application_law(t):
    # [TRIVIAL] apply(t, compose(theta, sigma)) == apply(apply(t, theta), sigma)
    theta = {"X": Compound("f", (Variable("Y"),))}
    sigma = {"Y": Constant("a"), "Z": Constant(2)}
    assert apply_subst(t, compose(theta, sigma)) == \
        apply_subst(apply_subst(t, theta), sigma)


def test_compose_prefers_theta_bindings():
    theta = {"X": Constant("a")}
    sigma = {"X": Constant("b"), "Y": Constant("c")}
    out = compose(theta, sigma)
    assert out["X"] == Constant("a") and out["Y"] == Constant("c")
