from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from foliacoh.algebra.forms import ExteriorForm, compose_substitutions, pullback, sort_sign, wedge
from foliacoh.algebra.polyfield import SymbolicDomainError, coefficient_field, from_expr, render, substitute

C = ("x0", "x1", "x2")
K = coefficient_field(C)
x0, x1, x2 = K.gens


def dx(i):
    return ExteriorForm.differential(C, i)


def fn(f):
    return ExteriorForm.function(C, f)


coefs = st.sampled_from([K.one, x0, x1 ** -1, x0 * x2 + 1, x2 / (x1 + 1), -3 * x1 ** 2])


@st.composite
def forms(draw, degree=None):
    deg = draw(st.integers(0, 2)) if degree is None else degree
    out = ExteriorForm.zero(C, deg, K)
    for idx in combinations(range(3), deg):
        if draw(st.booleans()):
            out = out + ExteriorForm(C, deg, {idx: draw(coefs)}, K)
    return out


def test_sort_sign():
    assert sort_sign((2, 0, 1)) == (1, (0, 1, 2))
    assert sort_sign((1, 0)) == (-1, (0, 1))
    assert sort_sign((1, 1))[0] == 0


def test_render_examples():
    assert render(-x1 ** -3) == "-1/x1^3"
    assert render(2 * x2 / x1 ** 3) == "2*x2/x1^3"
    assert render((x0 + 1) / (2 * x1)) == "(x0 + 1)/(2*x1)"
    w = (dx(0) ^ dx(1)).scale(-x1 ** -3)
    assert w.render() == "-1/x1^3 * dx0^dx1"
    assert (dx(0) - dx(1)).render() == "dx0 - dx1"
    assert dx(0).scale(x0 + 1).render() == "(x0 + 1) * dx0"


def test_d_of_function():
    f = fn(x0 * x1 ** 2)
    assert f.d() == dx(0).scale(x1 ** 2) + dx(1).scale(2 * x0 * x1)


@given(forms())
@settings(max_examples=60, deadline=None)
def test_d_squared_zero(a):
    assert a.d().d().is_zero()


@given(forms(), forms())
@settings(max_examples=60, deadline=None)
def test_graded_commutativity(a, b):
    sign = -1 if a.degree * b.degree % 2 else 1
    assert wedge(a, b) == wedge(b, a).scale(sign)


@given(forms(1), forms())
@settings(max_examples=40, deadline=None)
def test_leibniz(a, b):
    assert (a ^ b).d() == (a.d() ^ b) - (a ^ b.d())


def test_pullback_composes():
    s = {"x0": x0 + x1 ** 2, "x1": 2 * x1}
    t = {"x1": x1 + x2, "x2": x0 * x2}
    w = (dx(0) ^ dx(1)).scale(x2)
    assert pullback(pullback(w, s), t) == pullback(w, compose_substitutions(s, t))


@given(forms())
@settings(max_examples=30, deadline=None)
def test_pullback_commutes_with_d(a):
    s = {"x0": x0 * x1, "x1": x1 + x2 ** 2, "x2": 3 * x2}
    assert pullback(a.d(), s) == pullback(a, s).d()


def test_substitute_rejects_zero_denominator():
    with pytest.raises(SymbolicDomainError):
        substitute(1 / x1, {"x1": K.zero})


def test_from_expr_and_ratio():
    f = from_expr(K, "x2^2/(x1 + 1)")
    assert f == x2 ** 2 / (x1 + 1)
    w = dx(0) ^ dx(2)
    assert w.scale(f).ratio_to(w) == f
    assert (dx(0)).ratio_to(dx(1)) is None
