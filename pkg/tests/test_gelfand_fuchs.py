from fractions import Fraction
from itertools import combinations, combinations_with_replacement

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from foliacoh.gelfand_fuchs import (
    GFError,
    GFMonomial,
    NotClosedError,
    basis,
    build_complex,
    class_coordinates,
    cohomology,
    differential_matrix,
    element,
    euler_characteristic,
    induced_map,
    is_trivial_class,
    multiply,
    parse_element,
)


def oracle_betti(variant: str, n: int) -> list[int]:
    """Independent construction: exterior(y) x truncated poly(c), dense sympy ranks."""
    ys = {"W": list(range(1, n + 1)), "WO": list(range(1, n + 1, 2)), "WGL": []}[variant]
    cmons = [()]
    for k in range(1, n + 1):
        cmons += [m for m in combinations_with_replacement(range(1, n + 1), k) if sum(m) <= n]
    elems = [(S, m) for k in range(len(ys) + 1) for S in combinations(ys, k) for m in cmons]
    deg = lambda e: sum(2 * i - 1 for i in e[0]) + sum(2 * j for j in e[1])
    top = max(deg(e) for e in elems)
    by = {d: [e for e in elems if deg(e) == d] for d in range(top + 2)}

    def d_matrix(d):
        src, tgt = by[d], by[d + 1]
        idx = {e: i for i, e in enumerate(tgt)}
        M = sympy.zeros(len(tgt), len(src))
        for col, (S, m) in enumerate(src):
            for pos, i in enumerate(S):
                newm = tuple(sorted(m + (i,)))
                if sum(newm) > n:
                    continue
                M[idx[(S[:pos] + S[pos + 1:], newm)], col] += (-1) ** pos
        return M

    ranks = {d: (d_matrix(d).rank() if by[d] and by[d + 1] else 0) for d in range(top + 1)}
    return [len(by[d]) - ranks[d] - (ranks[d - 1] if d > 0 else 0) for d in range(top + 1)]


def test_wo1_and_wgl1():
    h = cohomology(build_complex("WO", 1))
    assert h.betti == [1, 0, 0, 1]
    assert [r.render() for r in h.representatives[3]] == ["y1*c1"]
    h = cohomology(build_complex("WGL", 1))
    assert h.betti == [1, 0, 1]
    assert h.representatives[2][0].render() == "c1"


@pytest.mark.parametrize("variant,n", [(v, n) for v in ("W", "WO", "WGL") for n in (1, 2, 3)])
def test_betti_against_oracle(variant, n):
    assert cohomology(build_complex(variant, n)).betti == oracle_betti(variant, n)


def test_known_tables():
    assert cohomology(build_complex("W", 2)).betti == [1, 0, 0, 0, 0, 2, 0, 1, 2]
    assert cohomology(build_complex("WO", 2)).betti == [1, 0, 0, 0, 1, 2]
    assert cohomology(build_complex("WGL", 2)).betti == [1, 0, 1, 0, 2]


def test_vanishing_range_of_W():
    # H^k(W_n) = 0 for 0 < k <= 2n
    for n in (1, 2, 3):
        b = cohomology(build_complex("W", n)).betti
        assert all(x == 0 for x in b[1:2 * n + 1])


def test_basis_and_truncation():
    W2 = build_complex("W", 2)
    assert [str(m) for m in basis(W2, 3)] == ["y2", "y1*c1"]
    W1 = build_complex("W", 1)
    assert differential_matrix(W1, 3).is_zero()  # y1 c1 -> c1^2, truncated
    assert multiply(W1, GFMonomial((), (1,)), GFMonomial((), (1,))) == (0, None)


@pytest.mark.parametrize("variant,n", [("W", 2), ("WO", 3), ("W", 3)])
def test_d_squared_zero(variant, n):
    cx = build_complex(variant, n)
    for deg in range(cx.top_degree):
        assert (differential_matrix(cx, deg + 1) @ differential_matrix(cx, deg)).is_zero()


def test_euler_characteristic_matches_betti():
    for v in ("W", "WO", "WGL"):
        for n in (1, 2, 3):
            cx = build_complex(v, n)
            b = cohomology(cx).betti
            assert euler_characteristic(cx) == sum((-1) ** k * x for k, x in enumerate(b))


def test_c2_trivial_in_W2_with_primitive_y2():
    W2 = build_complex("W", 2)
    c2 = parse_element(W2, "c2")
    res = is_trivial_class(W2, c2)
    assert res.trivial
    assert res.primitive.render() == "y2"
    assert res.primitive.d() == c2
    for v in ("WO", "WGL"):
        cx = build_complex(v, 2)
        assert not is_trivial_class(cx, parse_element(cx, "c2")).trivial


def test_induced_maps():
    m = induced_map(build_complex("WGL", 2), build_complex("WO", 2), 4)
    assert m.matrix == [[0, 1]]
    assert [k.render() for k in m.kernel] == ["c1*c1"]
    m = induced_map(build_complex("WGL", 1), build_complex("WO", 1), 2)
    assert m.is_zero() and [k.render() for k in m.kernel] == ["c1"]
    for deg in range(4):
        assert induced_map(build_complex("WO", 1), build_complex("W", 1), deg).is_isomorphism()
    with pytest.raises(GFError):
        induced_map(build_complex("W", 1), build_complex("WO", 1), 0)


def test_parse_and_render():
    W2 = build_complex("W", 2)
    e = parse_element(W2, "1/2*y1*c1 + y2 - 3*y2")
    assert e.terms[GFMonomial((1,), (1,))] == Fraction(1, 2)
    assert e.terms[GFMonomial((2,), ())] == -2
    assert parse_element(W2, "c2 - c1^2").render() == "-c1*c1 + c2"
    assert parse_element(W2, "2 - 1/3").render() == "5/3"
    assert parse_element(W2, " y1 * c1 ") == element(W2, ["y1*c1"])
    with pytest.raises(GFError):
        parse_element(W2, "y3")
    with pytest.raises(GFError):
        parse_element(W2, "y1 + c1")


def test_build_errors():
    with pytest.raises(GFError):
        build_complex("W", 0)
    with pytest.raises(GFError):
        build_complex("W", 9)
    with pytest.raises(GFError):
        build_complex("V", 1)


def test_class_coordinates_rejects_non_cocycle():
    W1 = build_complex("W", 1)
    with pytest.raises(NotClosedError):
        class_coordinates(W1, parse_element(W1, "y1"))


@given(st.sampled_from([("W", 2), ("WO", 2), ("WGL", 3)]), st.data())
@settings(max_examples=40, deadline=None)
def test_leibniz_rule(cxn, data):
    cx = build_complex(*cxn)
    mons = [m for ms in cx._bases.values() for m in ms]
    a = data.draw(st.sampled_from(mons))
    b = data.draw(st.sampled_from(mons))
    A, B = element(cx, [str(a)]), element(cx, [str(b)])
    assert (A * B).d() == A.d() * B + (A * B.d()).scale((-1) ** a.degree)


@given(st.sampled_from([("W", 2), ("WO", 3)]), st.data())
@settings(max_examples=30, deadline=None)
def test_exact_plus_cocycle_same_class(cxn, data):
    cx = build_complex(*cxn)
    h = cohomology(cx)
    degs = [d for d, reps in enumerate(h.representatives) if reps and d > 0]
    deg = data.draw(st.sampled_from(degs))
    rep = h.representatives[deg][0]
    prev = basis(cx, deg - 1)
    b = element(cx, {str(data.draw(st.sampled_from(prev))): data.draw(st.integers(-3, 3))}) if prev else None
    z = rep if b is None else rep + b.d()
    coords = class_coordinates(cx, z, deg)
    assert coords == [1] + [0] * (len(h.representatives[deg]) - 1)
