import random

import pytest
from hypothesis import given, settings, strategies as st

from foliacoh.cech import BigradedCochain, SimplicialComplex, horizontal_delta, random_cochain, simplicial_cohomology
from foliacoh.homotopy import (
    ContainmentError,
    fibered_cover_from_dict,
    homotopy_F,
    hybrid_string,
    hybrid_strings_composable,
    induced_cohomology_maps,
    k2_expansion,
    lambda_op,
    mu,
    product_complex,
    verify_identities,
)
from foliacoh.resources import FIBERED_MODELS, load_model


def cover(name):
    return fibered_cover_from_dict(load_model(name))


def test_product_of_edges_is_a_triangulated_square():
    e = SimplicialComplex(["0", "1"], [["0", "1"]])
    sq = product_complex(e, e)
    assert [len(sq.simplices(q)) for q in range(3)] == [4, 5, 2]
    assert simplicial_cohomology(sq, 2) == [1, 0, 0]
    # the diagonal runs from (0,0) to (1,1)
    assert sq.has_simplex([sq.index[("0", "0")], sq.index[("1", "1")]])


def test_cover_sizes():
    c = cover("edge_fiber")
    assert (len(c.small.objects), len(c.big.objects), len(c.big.morphisms)) == (2, 6, 17)
    p = cover("point_fiber")
    assert len(p.big.objects) == len(p.small.objects)
    assert len(p.big.morphisms) == len(p.small.morphisms)


def test_containment_violation_names_morphism_and_sub_object():
    data = load_model("edge_fiber")
    data["sub_objects"] = [s for s in data["sub_objects"] if s["id"] != "B_left"]
    with pytest.raises(ContainmentError) as e:
        fibered_cover_from_dict(data)
    assert (e.value.morphism, e.value.sub_object) == ("f", "A1")


def test_inclusion_and_hybrid_strings():
    c = cover("edge_fiber")
    assert c.inclusion("Q(B)") == c.big.identity("Q(B)")
    i = c.big.morphisms[c.inclusion("B_left")]
    assert (i.source, i.target) == ("B_left", "Q(B)")
    s = c.big.string_from_arrows([c.big_morphism[("A1", "B_left", "f")]])
    h0 = hybrid_string(c, s, 0)
    assert h0.arrows == (c.inclusion("A1"), "Q(f)")
    assert hybrid_string(c, s, 1).arrows == (s.arrows[0], c.inclusion("B_left"))
    assert hybrid_strings_composable(c, 3)


@pytest.mark.parametrize("name", FIBERED_MODELS)
def test_mu_is_linear_and_left_inverted_by_lambda(name):
    c = cover(name)
    rng = random.Random(3)
    assert mu(c, BigradedCochain(1, 0, {})).is_zero()
    for p, q in [(0, 0), (1, 0), (1, 1), (2, 1)]:
        a, b = random_cochain(c.small, p, q, rng), random_cochain(c.small, p, q, rng)
        assert (mu(c, a + b) - mu(c, a) - mu(c, b)).is_zero()
        assert (lambda_op(c, mu(c, a)) - a).is_zero()


def test_F_rejects_column_zero():
    c = cover("edge_fiber")
    with pytest.raises(ValueError):
        homotopy_F(c, BigradedCochain(0, 0, {}))


@pytest.mark.parametrize("name", FIBERED_MODELS)
def test_hand_expansion_at_length_two(name):
    c = cover(name)
    rng = random.Random(5)
    for q in (0, 1):
        phi = random_cochain(c.big, 2, q, rng)
        Fd = homotopy_F(c, horizontal_delta(c.big, phi))
        dF = horizontal_delta(c.big, homotopy_F(c, phi))
        for s in c.big.strings(2):
            ex = k2_expansion(c, phi, s)
            assert ex["relations_hold"]
            assert ex["F_delta"] == Fd.get(c.big, s)
            assert ex["delta_F"] == dF.get(c.big, s)
            total = tuple(x + y for x, y in zip(ex["F_delta"], ex["delta_F"]))
            assert total == ex["mu_lambda_minus_id"]


@pytest.mark.parametrize("name", FIBERED_MODELS)
def test_verify_identities(name):
    c = cover(name)
    rep = verify_identities(c, trials=10, max_degree=3, seed=1)
    assert rep.passed
    qmax = max(o.complex.dimension for o in c.big.objects.values())
    expected = [(p, n - p) for n in range(4) for p in range(n + 1) if n - p <= qmax]
    assert [(d.p, d.q) for d in rep.degrees] == expected
    assert all(d.k2_crosscheck for d in rep.degrees if d.p == 2)


def test_induced_maps_on_cohomology():
    comp = induced_cohomology_maps(cover("point_fiber"), 3)
    assert comp.small_betti == comp.big_betti == [1, 1, 0, 0]
    assert comp.mutually_inverse
    comp = induced_cohomology_maps(cover("edge_fiber"), 3)
    assert comp.small_betti == comp.big_betti == [1, 0, 0, 0]
    assert comp.mutually_inverse and comp.mu_matrices[0] == [[1]]


@given(st.integers(0, 10 ** 6), st.sampled_from([(0, 1), (1, 1), (2, 0), (1, 2)]))
@settings(max_examples=25, deadline=None)
def test_homotopy_identity_property(seed, pq):
    c = cover("edge_fiber")
    rng = random.Random(seed)
    x = random_cochain(c.big, *pq, rng)
    lhs = mu(c, lambda_op(c, x)) - x
    rhs = homotopy_F(c, horizontal_delta(c.big, x))
    if pq[0] >= 1:
        rhs = rhs + horizontal_delta(c.big, homotopy_F(c, x))
    assert (lhs - rhs).is_zero()
