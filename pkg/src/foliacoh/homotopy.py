"""
Comparison of the double complex of a product cover with that of its
refinement by sub-objects.

For a base chart category, a fiber complex and a family of sub-objects
V of the products Q(U) = U x fiber, two categories are built:

* ``small``: the products Q(U) with morphisms Q(h) = h x id;
* ``big``: the products together with the sub-objects, with a morphism
  V -> V' over every base morphism h: U -> U' such that Q(h)(V) lies in V'.

Every big morphism remembers its base morphism h, which is what the maps

    mu(phi)(g_1..g_k)     = phi(Q(h_1)..Q(h_k)) restricted to V_0
    lambda(c)(Q(h_1)..)   = c(Q(h_1)..Q(h_k))
    F(phi)(g_1..g_{k-1})  = sum_s (-1)^s phi(g_1..g_s, i_s, Q(h_{s+1})..Q(h_{k-1}))

need.  ``verify_identities`` checks lambda mu = id and
mu lambda - id = delta F + F delta on random exact cochains.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Mapping, Sequence

from .cech import (
    BigradedCochain,
    ChainString,
    ChartCategory,
    ChartMorphism,
    ChartObject,
    GuardError,
    ModelValidationError,
    SimplicialComplex,
    TotalCohomologyResult,
    category_from_dict,
    horizontal_delta,
    random_cochain,
    require_valid,
    simplicial_d,
    total_cohomology,
)

DEFAULT_MAX_MORPHISMS = 20_000


class ContainmentError(ModelValidationError):
    kind = "containment violation"

    def __init__(self, morphism: str, sub_object: str, message: str):
        super().__init__(message)
        self.morphism = morphism
        self.sub_object = sub_object


# --- products -----------------------------------------------------------------


def product_complex(base: SimplicialComplex, fiber: SimplicialComplex) -> SimplicialComplex:
    """
    Ordered-vertex triangulation of base x fiber: the maximal simplices are
    the monotone staircases through sigma x tau for maximal sigma, tau.
    """
    verts = [(u, f) for u in base.vertices for f in fiber.vertices]
    maxes = []
    for s in base.maximal or [(i,) for i in range(len(base.vertices))]:
        for t in fiber.maximal or [(j,) for j in range(len(fiber.vertices))]:
            for path in _staircases(len(s), len(t)):
                maxes.append([(base.vertices[s[a]], fiber.vertices[t[b]]) for a, b in path])
    return SimplicialComplex(verts, maxes)


def _staircases(m: int, n: int) -> list[list[tuple[int, int]]]:
    """Lattice paths from (0,0) to (m-1,n-1) with unit steps right or up."""
    if m == 1 and n == 1:
        return [[(0, 0)]]
    out = []
    if m > 1:
        out += [p + [(m - 1, n - 1)] for p in _staircases(m - 1, n)]
    if n > 1:
        out += [p + [(m - 1, n - 1)] for p in _staircases(m, n - 1)]
    return out


# --- the fibered cover ---------------------------------------------------------


@dataclass(frozen=True)
class SubObject:
    id: str
    base_object: str
    vertices: tuple[Hashable, ...]


@dataclass
class FiberedCover:
    """The product cover, its refinement, and the base data every big morphism carries."""

    base: ChartCategory
    fiber: SimplicialComplex
    small: ChartCategory
    big: ChartCategory
    product_id: dict[str, str]          # base object -> id of Q(U) (same id in small and big)
    lift: dict[str, str]                # base morphism -> Q(h) in small (same id in big)
    over: dict[str, str]                # big object -> base object
    base_of: dict[str, str]             # big morphism -> base morphism
    big_morphism: dict[tuple[str, str, str], str]  # (V, V', h) -> big morphism id

    def inclusion(self, obj: str) -> str:
        """i: V -> Q(U) (the identity when V is the product itself)."""
        u = self.over[obj]
        return self.big_morphism[(obj, self.product_id[u], self.base.identity(u))]

    def extended(self, h: str) -> str:
        """Q(h) as a big morphism between products."""
        return self.lift[h]

    def underlying(self, s: ChainString) -> ChainString:
        """The small-cover string Q(U_0) -> .. -> Q(U_k) under a big string."""
        return ChainString(self.product_id[self.over[s.source]], tuple(self.lift[self.base_of[g]] for g in s.arrows))

    def restrict(self, obj: str, q: int, values: Sequence[Fraction]) -> tuple[Fraction, ...]:
        """Restriction of a q-cochain on Q(U) to the sub-object ``obj``."""
        return tuple(self.big.pullback(self.inclusion(obj), q, values))

    def to_json(self) -> dict:
        return {
            "small": {"objects": len(self.small.objects), "morphisms": len(self.small.morphisms)},
            "big": {"objects": len(self.big.objects), "morphisms": len(self.big.morphisms)},
        }


def build_extended_cover(base: ChartCategory, fiber: SimplicialComplex,
                         sub_objects: Sequence[SubObject] = (), max_morphisms: int = DEFAULT_MAX_MORPHISMS) -> FiberedCover:
    """
    Build both covers.  A sub-object is the full subcomplex of Q(U) on the
    listed vertices; one equal to all of Q(U) is identified with Q(U).

    Every proper sub-object V of Q(U) must have, for every base morphism
    h: U -> U', a listed sub-object of Q(U') (or Q(U') itself, when listed)
    containing Q(h)(V); otherwise ContainmentError names (h, V).
    """
    require_valid(base)
    products = {u: product_complex(o.complex, fiber) for u, o in base.objects.items()}
    product_id = {u: f"Q({u})" for u in base.objects}
    lift = {h: f"Q({h})" for h in base.morphisms}

    def q_map(h: str) -> dict:
        m = base.morphisms[h]
        return {(u, f): (m.vertex_map[u], f) for (u, f) in products[m.source].vertices}

    small_objects = [ChartObject(product_id[u], products[u]) for u in base.objects]
    small_morphisms = [
        ChartMorphism(lift[h], product_id[m.source], product_id[m.target], q_map(h)) for h, m in base.morphisms.items()
    ]
    small_comp = {(lift[f], lift[g]): lift[h] for (f, g), h in base.composition.items()}
    small_ids = {product_id[u]: lift[i] for u, i in base.identities.items() if i is not None}
    small = require_valid(ChartCategory(small_objects, small_morphisms, small_comp, small_ids))

    # objects of the big category
    members: dict[str, list[tuple[str, frozenset]]] = {u: [(product_id[u], frozenset(products[u].vertices))] for u in base.objects}
    listed_full: set[str] = set()
    complexes = {product_id[u]: products[u] for u in base.objects}
    over = {product_id[u]: u for u in base.objects}
    for so in sub_objects:
        if so.base_object not in base.objects:
            raise ModelValidationError(f"sub-object {so.id!r} lies over unknown object {so.base_object!r}")
        P = products[so.base_object]
        vs = frozenset(so.vertices)
        unknown = vs - set(P.vertices)
        if not vs or unknown:
            raise ModelValidationError(f"sub-object {so.id!r} is not a nonempty vertex set of {product_id[so.base_object]}")
        if vs == frozenset(P.vertices):
            listed_full.add(so.base_object)
            continue
        if so.id in complexes:
            raise ModelValidationError(f"duplicate object id {so.id!r}")
        if any(vs == w for _, w in members[so.base_object]):
            raise ModelValidationError(f"sub-object {so.id!r} repeats another sub-object")
        members[so.base_object].append((so.id, vs))
        complexes[so.id] = P.full_subcomplex(vs)
        over[so.id] = so.base_object

    # containment check over every base morphism
    for h, m in base.morphisms.items():
        qm = q_map(h)
        for vid, vs in members[m.source][1:]:
            image = {qm[x] for x in vs}
            targets = members[m.target][1:] + ([members[m.target][0]] if m.target in listed_full else [])
            if not any(image <= w for _, w in targets):
                raise ContainmentError(h, vid, f"image of {vid!r} under Q({h}) lies in no listed sub-object of {product_id[m.target]}")

    # morphisms (V, V', h) with Q(h)(V) inside V'
    big_morphism: dict[tuple[str, str, str], str] = {}
    big_morphisms: list[ChartMorphism] = []
    base_of: dict[str, str] = {}
    for h, m in base.morphisms.items():
        qm = q_map(h)
        for vid, vs in members[m.source]:
            image = {qm[x] for x in vs}
            for wid, ws in members[m.target]:
                if not image <= ws:
                    continue
                if vid == product_id[m.source] and wid == product_id[m.target]:
                    mid = lift[h]
                else:
                    mid = f"{h}:{vid}->{wid}"
                big_morphism[(vid, wid, h)] = mid
                base_of[mid] = h
                big_morphisms.append(ChartMorphism(mid, vid, wid, {x: qm[x] for x in vs}))
                if len(big_morphisms) > max_morphisms:
                    raise GuardError(f"refined cover exceeds {max_morphisms} morphisms")
    big_objects = [ChartObject(vid, complexes[vid]) for u in base.objects for vid, _ in members[u]]
    big_comp = {}
    for (v, w, h), mid in big_morphism.items():
        for (w2, x, h2), mid2 in big_morphism.items():
            if w2 == w:
                big_comp[(mid, mid2)] = big_morphism[(v, x, base.compose(h, h2))]
    big_ids = {vid: big_morphism[(vid, vid, base.identity(over[vid]))] for vid in complexes}
    big = require_valid(ChartCategory(big_objects, big_morphisms, big_comp, big_ids))
    return FiberedCover(base, fiber, small, big, product_id, lift, over, base_of, big_morphism)


def fibered_cover_from_dict(data: Mapping) -> FiberedCover:
    """
    A chart-category model with two extra sections:
    ``fiber`` ({vertices, maximal_simplices}) and ``sub_objects``
    ([{id, object, vertices: [[base vertex, fiber vertex], ...]}]).
    """
    base = category_from_dict(data)
    try:
        fd = data["fiber"]
        fiber = SimplicialComplex([str(v) for v in fd["vertices"]], [[str(v) for v in s] for s in fd.get("maximal_simplices", [])])
        subs = [
            SubObject(str(s["id"]), str(s["object"]), tuple((str(a), str(b)) for a, b in s["vertices"]))
            for s in data.get("sub_objects", [])
        ]
    except (KeyError, TypeError, ValueError) as e:
        raise ModelValidationError(f"malformed fibered model: {e!r}") from None
    return build_extended_cover(base, fiber, subs)


# --- the three maps ------------------------------------------------------------


def mu(cover: FiberedCover, phi: BigradedCochain) -> BigradedCochain:
    """Small-cover cochain -> big-cover cochain."""
    out = {}
    for s in cover.big.strings(phi.p):
        val = phi.values.get(cover.underlying(s))
        if val is None:
            continue
        r = cover.restrict(s.source, phi.q, val)
        if any(r):
            out[s] = r
    return BigradedCochain(phi.p, phi.q, out)


def lambda_op(cover: FiberedCover, c: BigradedCochain) -> BigradedCochain:
    """Big-cover cochain -> its values on strings of products."""
    out = {}
    for s in cover.small.strings(c.p):
        val = c.values.get(s)  # small strings are literally big strings with the same ids
        if val is not None and any(val):
            out[s] = val
    return BigradedCochain(c.p, c.q, out)


def hybrid_string(cover: FiberedCover, s: ChainString, k: int) -> ChainString:
    """(g_1..g_k, i_k, Q(h_{k+1})..Q(h_m)) for a big string s of length m and 0 <= k <= m."""
    objs = [s.source]
    for g in s.arrows:
        objs.append(cover.big.morphisms[g].target)
    tail = tuple(cover.extended(cover.base_of[g]) for g in s.arrows[k:])
    return ChainString(s.source, s.arrows[:k] + (cover.inclusion(objs[k]),) + tail)


def homotopy_F(cover: FiberedCover, c: BigradedCochain) -> BigradedCochain:
    """C^{k,q} -> C^{k-1,q} on the big cover; k = 0 is rejected."""
    if c.p < 1:
        raise ValueError("the homotopy operator needs k >= 1")
    k = c.p
    out = {}
    for s in cover.big.strings(k - 1):
        dim = cover.big.source_complex(s).dim_cochains(c.q)
        acc = [Fraction(0)] * dim
        for t in range(k):
            val = c.values.get(hybrid_string(cover, s, t))
            if val is None:
                continue
            sign = -1 if t % 2 else 1
            for i, x in enumerate(val):
                if x:
                    acc[i] += sign * x
        if any(acc):
            out[s] = tuple(acc)
    return BigradedCochain(k - 1, c.q, out)


def _F_or_zero(cover: FiberedCover, c: BigradedCochain) -> BigradedCochain:
    return homotopy_F(cover, c) if c.p >= 1 else BigradedCochain(-1, c.q, {})


# --- hand expansion at k = 2 ----------------------------------------------------


def k2_expansion(cover: FiberedCover, phi: BigradedCochain, s: ChainString) -> dict[str, tuple[Fraction, ...]]:
    """
    Term-by-term evaluation at (g_1, g_2) of

      F(delta phi): twelve terms,  delta(F phi): six terms,  (mu lambda - id)(phi): two terms,

    written out by hand from the alternating sums (phi in C^{2,q} on the big cover).
    """
    if phi.p != 2 or s.length != 2:
        raise ValueError("the expansion is for phi in C^{2,q} and a string of length 2")
    big, q = cover.big, phi.q
    g1, g2 = s.arrows
    V0 = s.source
    V1 = big.morphisms[g1].target
    V2 = big.morphisms[g2].target
    h1, h2 = cover.base_of[g1], cover.base_of[g2]
    Q1, Q2 = cover.extended(h1), cover.extended(h2)
    i0, i1, i2 = cover.inclusion(V0), cover.inclusion(V1), cover.inclusion(V2)
    comp = big.compose

    def ev(*arrows: str) -> tuple[Fraction, ...]:
        st = big.string_from_arrows(arrows)
        return phi.get(big, st)

    def pb(g: str, v: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
        return tuple(big.pullback(g, q, v))

    def lin(*terms) -> tuple[Fraction, ...]:
        dim = big.objects[V0].complex.dim_cochains(q)
        acc = [Fraction(0)] * dim
        for sign, v in terms:
            for i, x in enumerate(v):
                acc[i] += sign * x
        return tuple(acc)

    F_delta = lin(
        (1, pb(i0, ev(Q1, Q2))), (-1, ev(comp(i0, Q1), Q2)), (1, ev(i0, comp(Q1, Q2))), (-1, ev(i0, Q1)),
        (-1, pb(g1, ev(i1, Q2))), (1, ev(comp(g1, i1), Q2)), (-1, ev(g1, comp(i1, Q2))), (1, ev(g1, i1)),
        (1, pb(g1, ev(g2, i2))), (-1, ev(comp(g1, g2), i2)), (1, ev(g1, comp(g2, i2))), (-1, ev(g1, g2)),
    )
    Q21 = cover.extended(cover.base.compose(h1, h2))
    delta_F = lin(
        (1, pb(g1, ev(i1, Q2))), (-1, pb(g1, ev(g2, i2))), (-1, ev(i0, Q21)),
        (1, ev(comp(g1, g2), i2)), (1, ev(i0, Q1)), (-1, ev(g1, i1)),
    )
    mu_lambda = lin((1, pb(i0, ev(Q1, Q2))), (-1, ev(g1, g2)))
    # the relation Q(h_s) o i_s = i_{s+1} o g_s used to cancel the remaining terms
    relations = [comp(i0, Q1) == comp(g1, i1), comp(i1, Q2) == comp(g2, i2)]
    return {"F_delta": F_delta, "delta_F": delta_F, "mu_lambda_minus_id": mu_lambda, "relations_hold": all(relations)}


# --- verification --------------------------------------------------------------


@dataclass
class DegreeCheck:
    p: int
    q: int
    trials: int
    lambda_mu_residual: int = 0      # number of nonzero entries over all trials
    homotopy_residual: int = 0
    F_commutes_with_d: bool = True
    k2_crosscheck: bool | None = None

    @property
    def passed(self) -> bool:
        return (self.lambda_mu_residual == 0 and self.homotopy_residual == 0 and self.F_commutes_with_d
                and self.k2_crosscheck is not False)

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "q": self.q,
            "trials": self.trials,
            "lambda_mu_residual_nonzero": self.lambda_mu_residual,
            "homotopy_residual_nonzero": self.homotopy_residual,
            "F_commutes_with_d": self.F_commutes_with_d,
            "k2_crosscheck": self.k2_crosscheck,
            "pass": self.passed,
        }


@dataclass
class HomotopyReport:
    seed: int
    trials: int
    max_degree: int
    degrees: list[DegreeCheck] = field(default_factory=list)
    hybrid_strings_composable: bool = True
    cohomology: dict | None = None

    @property
    def passed(self) -> bool:
        coh_ok = self.cohomology is None or self.cohomology["mutually_inverse"]
        return all(d.passed for d in self.degrees) and self.hybrid_strings_composable and coh_ok

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "trials": self.trials,
            "max_degree": self.max_degree,
            "degrees_checked": [[d.p, d.q] for d in self.degrees],
            "checks": [d.to_json() for d in self.degrees],
            "hybrid_strings_composable": self.hybrid_strings_composable,
            "cohomology": self.cohomology,
            "pass": self.passed,
        }


def _nonzero_count(c: BigradedCochain) -> int:
    return sum(1 for v in c.values.values() for x in v if x)


def hybrid_strings_composable(cover: FiberedCover, max_length: int) -> bool:
    """Every hybrid string F can build from big strings of length < max_length is a string of the big category."""
    big = cover.big
    for m in range(max_length):
        for s in big.strings(m):
            for k in range(m + 1):
                h = hybrid_string(cover, s, k)
                try:
                    big.string_from_arrows(h.arrows)
                except (ValueError, KeyError):
                    return False
    return True


def verify_identities(cover: FiberedCover, trials: int = 100, max_degree: int = 3, seed: int = 0,
                      cohomology_check: bool = True) -> HomotopyReport:
    """Random-cochain check of both identities for every bidegree with p + q <= max_degree."""
    rng = random.Random(seed)
    report = HomotopyReport(seed, trials, max_degree)
    qmax = max(o.complex.dimension for o in cover.big.objects.values())
    for n in range(max_degree + 1):
        for p in range(n + 1):
            q = n - p
            if q > qmax:
                continue
            chk = DegreeCheck(p, q, trials)
            k2_ok = True if p == 2 else None
            for _ in range(trials):
                phi = random_cochain(cover.small, p, q, rng)
                chk.lambda_mu_residual += _nonzero_count(lambda_op(cover, mu(cover, phi)) - phi)

                c = random_cochain(cover.big, p, q, rng)
                lhs = mu(cover, lambda_op(cover, c)) - c
                rhs = homotopy_F(cover, horizontal_delta(cover.big, c))
                if p >= 1:
                    rhs = rhs + horizontal_delta(cover.big, homotopy_F(cover, c))
                chk.homotopy_residual += _nonzero_count(lhs - rhs)

                if p >= 1:
                    a = homotopy_F(cover, simplicial_d(cover.big, c))
                    b = simplicial_d(cover.big, homotopy_F(cover, c))
                    if not (a - b).is_zero():
                        chk.F_commutes_with_d = False

                if p == 2:
                    Fd = homotopy_F(cover, horizontal_delta(cover.big, c))
                    dF = horizontal_delta(cover.big, homotopy_F(cover, c))
                    for s in cover.big.strings(2):
                        ex = k2_expansion(cover, c, s)
                        if (not ex["relations_hold"] or ex["F_delta"] != Fd.get(cover.big, s)
                                or ex["delta_F"] != dF.get(cover.big, s)
                                or ex["mu_lambda_minus_id"] != lhs.get(cover.big, s)):
                            k2_ok = False
            chk.k2_crosscheck = k2_ok
            report.degrees.append(chk)
    report.hybrid_strings_composable = hybrid_strings_composable(cover, max_degree + 1)
    if cohomology_check:
        report.cohomology = induced_cohomology_maps(cover, max_degree).to_json()
    return report


# --- cohomology level ------------------------------------------------------------


@dataclass
class CohomologyComparison:
    small_betti: list[int]
    big_betti: list[int]
    mu_matrices: list[list[list[Fraction]]]
    lambda_matrices: list[list[list[Fraction]]]
    mutually_inverse: bool

    def to_json(self) -> dict:
        from .algebra.rational import format_rational

        fmt = lambda ms: [[[format_rational(x) for x in row] for row in m] for m in ms]
        return {
            "small_betti": self.small_betti,
            "big_betti": self.big_betti,
            "mu": fmt(self.mu_matrices),
            "lambda": fmt(self.lambda_matrices),
            "mutually_inverse": self.mutually_inverse,
        }


def _apply_total(cover: FiberedCover, op, parts: Mapping[int, BigradedCochain]) -> dict[int, BigradedCochain]:
    return {p: op(cover, c) for p, c in parts.items()}


def _class_matrix(src: TotalCohomologyResult, tgt: TotalCohomologyResult, n: int, op, cover) -> list[list[Fraction]]:
    cols = []
    for rep in src.representatives[n]:
        coords = tgt.class_coordinates(n, _apply_total(cover, op, rep))
        if coords is None:
            raise ArithmeticError("image of a cocycle is not closed")
        cols.append(coords)
    rows = len(tgt.representatives[n])
    return [[cols[j][i] for j in range(len(cols))] for i in range(rows)]


def _matmul(a: list[list[Fraction]], b: list[list[Fraction]], inner: int) -> list[list[Fraction]]:
    return [[sum((a[i][k] * b[k][j] for k in range(inner)), Fraction(0)) for j in range(len(b[0]) if b else 0)]
            for i in range(len(a))]


def induced_cohomology_maps(cover: FiberedCover, max_degree: int) -> CohomologyComparison:
    """Matrices of mu and lambda on total cohomology and whether they are mutually inverse."""
    hs = total_cohomology(cover.small, max_degree)
    hb = total_cohomology(cover.big, max_degree)
    mus, lams, ok = [], [], hs.betti == hb.betti
    for n in range(max_degree + 1):
        M = _class_matrix(hs, hb, n, mu, cover)
        L = _class_matrix(hb, hs, n, lambda_op, cover)
        mus.append(M)
        lams.append(L)
        if ok:
            b = hs.betti[n]
            ident = [[Fraction(int(i == j)) for j in range(b)] for i in range(b)]
            if b and (_matmul(L, M, b) != ident or _matmul(M, L, b) != ident):
                ok = False
    return CohomologyComparison(hs.betti, hb.betti, mus, lams, ok)
