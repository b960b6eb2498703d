from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from foliacoh.algebra.linalg import (
    Echelon,
    SparseMatrix,
    cohomology_basis,
    coordinates_mod,
    rank,
    rank_kernel_image,
    solve,
)
from foliacoh.algebra.rational import as_rational, format_rational, parse_rational


def bareiss_rank(rows: list[list[int]]) -> int:
    """Fraction-free elimination on an integer matrix (independent of the library)."""
    a = [list(r) for r in rows]
    m = len(a)
    n = len(a[0]) if a else 0
    r, prev = 0, 1
    for c in range(n):
        piv = next((i for i in range(r, m) if a[i][c] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        for i in range(r + 1, m):
            for j in range(c + 1, n):
                a[i][j] = (a[r][c] * a[i][j] - a[i][c] * a[r][j]) // prev
            a[i][c] = 0
        prev = a[r][c]
        r += 1
    return r


small_ints = st.integers(min_value=-3, max_value=3)
matrices = st.integers(1, 6).flatmap(
    lambda m: st.integers(1, 6).flatmap(lambda n: st.lists(st.lists(small_ints, min_size=n, max_size=n), min_size=m, max_size=m))
)


def test_rank_examples():
    assert rank(SparseMatrix.from_dense([[1, 2], [2, 4]])) == 1
    assert rank(SparseMatrix.from_dense([[0, 0], [0, 0]])) == 0
    assert rank(SparseMatrix.identity(4)) == 4


@given(matrices)
@settings(max_examples=150, deadline=None)
def test_rank_matches_bareiss(rows):
    assert rank(SparseMatrix.from_dense(rows)) == bareiss_rank(rows)


@given(matrices)
@settings(max_examples=150, deadline=None)
def test_rank_nullity_and_kernel(rows):
    m = SparseMatrix.from_dense(rows)
    rki = rank_kernel_image(m)
    assert rki.rank + len(rki.kernel) == m.cols
    for v in rki.kernel:
        assert m.apply(v) == {}
    assert len(rki.image) == rki.rank
    assert len(Echelon(rki.kernel)) == len(rki.kernel)


@given(matrices, st.data())
@settings(max_examples=100, deadline=None)
def test_solve_round_trip(rows, data):
    m = SparseMatrix.from_dense(rows)
    x = {j: Fraction(data.draw(small_ints)) for j in range(m.cols)}
    b = m.apply(x)
    y = solve(m, b)
    assert y is not None
    assert m.apply(y) == b


def test_solve_inconsistent():
    m = SparseMatrix.from_dense([[1, 1], [1, 1]])
    assert solve(m, {0: Fraction(1), 1: Fraction(2)}) is None


def test_transpose_and_product():
    a = SparseMatrix.from_dense([[1, 2, 0], [0, 1, -1]])
    b = SparseMatrix.from_dense([[1, 0], [0, 1], [1, 1]])
    assert (a @ b).to_dense() == [[1, 2], [-1, 0]]
    assert a.transpose().transpose() == a


def test_cohomology_of_interval_and_circle():
    # interval: two vertices, one edge
    d0 = SparseMatrix.from_dense([[-1, 1]])
    reps0, _ = cohomology_basis(None, d0, 2)
    reps1, _ = cohomology_basis(d0, None, 1)
    assert (len(reps0), len(reps1)) == (1, 0)
    # circle: three vertices, three edges
    d0 = SparseMatrix.from_dense([[-1, 1, 0], [-1, 0, 1], [0, -1, 1]])
    reps1, bnd = cohomology_basis(d0, None, 3)
    assert len(reps1) == 1
    assert coordinates_mod(reps1, bnd, {0: Fraction(1)}, 3) is not None


def test_rational_text():
    assert format_rational(Fraction(-3, 6)) == "-1/2"
    assert format_rational(4) == "4"
    assert parse_rational(" 7/14 ") == Fraction(1, 2)
    assert as_rational("3") == 3
    with pytest.raises(TypeError):
        as_rational(object())
