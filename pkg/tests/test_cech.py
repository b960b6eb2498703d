import json
import random
from fractions import Fraction
from pathlib import Path

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from foliacoh.cech import (
    BigradedCochain,
    ChainString,
    GuardError,
    IncompatibleFamilyError,
    ModelValidationError,
    NonSimplicialMapError,
    OpenCompositionError,
    SimplicialComplex,
    category_from_dict,
    category_to_dict,
    horizontal_delta,
    j_map,
    random_cochain,
    simplicial_cohomology,
    simplicial_d,
    total_D,
    total_cohomology,
    validate_category,
    vertical_d,
)
from foliacoh.resources import MODELS, load_model

ORACLE = json.loads((Path(__file__).parent / "fixtures" / "simplicial_oracle.json").read_text())["complexes"]


def oracle_betti(name: str) -> list[int]:
    c = ORACLE[name]
    ranks = [sympy.Matrix(m).rank() for m in c["coboundaries"]]
    out = []
    for q, dim in enumerate(c["dims"]):
        r_out = ranks[q] if q < len(ranks) else 0
        r_in = ranks[q - 1] if q > 0 else 0
        out.append(dim - r_out - r_in)
    return out


def cat(name):
    return category_from_dict(load_model(name))


def test_oracle_fixture_is_consistent():
    for name, c in ORACLE.items():
        assert oracle_betti(name) == c["betti"]
        for a, b in zip(c["coboundaries"], c["coboundaries"][1:]):
            assert (sympy.Matrix(b) * sympy.Matrix(a)).is_zero_matrix


def test_simplicial_complex_basics():
    cx = SimplicialComplex(["a", "b", "c"], [["a", "b", "c"]])
    assert cx.simplices(1) == [(0, 1), (0, 2), (1, 2)]
    assert cx.dimension == 2
    assert simplicial_cohomology(cx, 2) == [1, 0, 0]
    assert (cx.coboundary_matrix(1) @ cx.coboundary_matrix(0)).is_zero()
    hollow = SimplicialComplex(["0", "1", "2"], [["0", "1"], ["0", "2"], ["1", "2"]])
    assert hollow.coboundary_matrix(0).to_dense() == ORACLE["triangle_boundary"]["coboundaries"][0]
    assert simplicial_cohomology(hollow, 1) == oracle_betti("triangle_boundary")
    assert simplicial_cohomology(hollow.full_subcomplex(["0", "1"]), 1) == [1, 0]


@pytest.mark.parametrize("name,oracle", [("point", "point"), ("circle_one_chart", "triangle_boundary"),
                                         ("circle_pushout", "square_nerve")])
def test_total_cohomology_matches_oracle(name, oracle):
    expected = oracle_betti(oracle)
    assert total_cohomology(cat(name), 2).betti == expected + [0] * (3 - len(expected))


def test_finite_group_model_gives_invariants():
    # Z/2 swapping the ends of an edge: rationally the invariant part of H(edge) = [1, 0]
    assert total_cohomology(cat("z2"), 2).betti == [1, 0, 0]
    assert total_cohomology(cat("arrow"), 2).betti == [1, 0, 0]


def test_strings_include_identities():
    c = cat("arrow")
    assert [s.arrows for s in c.strings(1)] == [("id_A",), ("f",), ("id_B",)]
    assert [s.arrows for s in c.strings(2)] == [("id_A", "id_A"), ("id_A", "f"), ("f", "id_B"), ("id_B", "id_B")]
    assert [c.count_strings(p) for p in range(4)] == [2, 3, 4, 5]
    assert c.target_of(ChainString("A", ("f", "id_B"))) == "B"


def test_delta_on_functions():
    c = cat("arrow")
    w = BigradedCochain(0, 0, {ChainString("A", ()): (Fraction(2),), ChainString("B", ()): (Fraction(5),)})
    dw = horizontal_delta(c, w)
    assert dw.values == {ChainString("A", ("f",)): (Fraction(3),)}


def test_delta_on_identity_strings_is_identity():
    c = cat("point")
    only = c.strings(1)[0]
    w = BigradedCochain(1, 0, {only: (Fraction(7),)})
    assert horizontal_delta(c, w).values == {c.strings(2)[0]: (Fraction(7),)}


def test_delta_pulls_back_along_the_first_arrow():
    c = cat("z2")
    w = BigradedCochain(0, 1, {ChainString("E", ()): (Fraction(1),)})
    assert horizontal_delta(c, w).values == {ChainString("E", ("t",)): (Fraction(-2),)}


def test_vertical_sign():
    c = cat("circle_one_chart")
    s = c.strings(1)[0]
    w = BigradedCochain(1, 0, {s: (Fraction(1), Fraction(0), Fraction(0))})
    assert vertical_d(c, w).values == {s: tuple(-x for x in simplicial_d(c, w).values[s])}


@pytest.mark.parametrize("name", MODELS)
def test_delta_and_D_square_to_zero(name):
    c = cat(name)
    rng = random.Random(11)
    qmax = max(o.complex.dimension for o in c.objects.values())
    for trial in range(100):
        p = trial % 3
        q = rng.randint(0, qmax)
        w = random_cochain(c, p, q, rng)
        assert horizontal_delta(c, horizontal_delta(c, w)).is_zero()
        n = p + q
        parts = {pp: random_cochain(c, pp, n - pp, rng) for pp in range(max(0, n - qmax), n + 1)}
        assert all(x.is_zero() for x in total_D(c, total_D(c, parts)).values())


def test_total_differential_matrices_compose_to_zero():
    from foliacoh.cech import TotalComplex

    tc = TotalComplex(cat("circle_pushout"))
    for n in range(3):
        assert (tc.differential(n + 1) @ tc.differential(n)).is_zero()


def test_j_map_of_closed_form_on_circle():
    c = cat("circle_one_chart")
    w = j_map(c, {"S": [1, 0, 0]}, 1)
    assert w.p == 0 and w.q == 1
    assert all(x.is_zero() for x in total_D(c, {0: w}).values())
    res = total_cohomology(c, 2)
    assert res.class_coordinates(1, {0: w}) == [1]
    # an exact family gives the zero class
    assert res.class_coordinates(1, {0: j_map(c, {"S": [-1, -1, 0]}, 1)}) == [0]


def test_j_map_rejects_incompatible_family():
    with pytest.raises(IncompatibleFamilyError) as e:
        j_map(cat("z2"), {"E": [1]}, 1)
    assert e.value.morphism == "t"
    assert not j_map(cat("z2"), {"E": [3, 3]}, 0).is_zero()


def test_class_coordinates_rejects_non_cocycle():
    c = cat("circle_one_chart")
    res = total_cohomology(c, 1)
    w = BigradedCochain(0, 0, {ChainString("S", ()): (Fraction(1), Fraction(0), Fraction(0))})
    assert res.class_coordinates(0, {0: w}) is None


def test_validation_diagnostics():
    data = load_model("z2")
    del data["composition"][0]
    with pytest.raises(OpenCompositionError):
        category_from_dict(data)
    c = cat("z2")
    c.composition.clear()
    assert [d.kind for d in validate_category(c)] == ["open composition"]

    data = load_model("arrow")
    data["morphisms"] = [m for m in data["morphisms"] if m["id"] != "id_B"]
    with pytest.raises(ModelValidationError) as e:
        category_from_dict(data)
    assert e.value.kind == "missing identity"

    data = load_model("circle_one_chart")
    data["morphisms"].append({"id": "bad", "source": "S", "target": "S", "vertex_map": {"0": "0", "1": "0", "2": "9"}})
    with pytest.raises(NonSimplicialMapError):
        category_from_dict(data)

    with pytest.raises(ModelValidationError):
        category_from_dict({"objects": []})


def test_round_trip_through_dict():
    for name in MODELS:
        c = cat(name)
        again = category_from_dict(category_to_dict(c) | {"identities": c.identities})
        assert validate_category(again) == []
        assert [again.count_strings(p) for p in range(3)] == [c.count_strings(p) for p in range(3)]


def test_string_guard(monkeypatch):
    monkeypatch.setenv("FOLIACOH_MAX_STRINGS", "3")
    with pytest.raises(GuardError):
        total_cohomology(cat("arrow"), 2)
    assert total_cohomology(cat("point"), 2).betti == [1, 0, 0]


@given(st.integers(0, 2), st.integers(0, 10 ** 6))
@settings(max_examples=30, deadline=None)
def test_one_chart_category_is_simplicial_cohomology(dim, seed):
    rng = random.Random(seed)
    verts = [str(i) for i in range(rng.randint(1, 5))]
    maximal = [rng.sample(verts, min(len(verts), dim + 1)) for _ in range(rng.randint(0, 4))]
    cx = SimplicialComplex(verts, maximal)
    data = {
        "objects": [{"id": "X", "vertices": verts, "maximal_simplices": [list(s) for s in maximal]}],
        "morphisms": [{"id": "id_X", "source": "X", "target": "X", "vertex_map": {v: v for v in verts}}],
    }
    top = cx.dimension + 1
    assert total_cohomology(category_from_dict(data), top).betti == simplicial_cohomology(cx, top)
