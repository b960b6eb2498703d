"""
Finite DGA models of the cohomology of formal vector fields.

The algebra W_n is free graded-commutative on y_1..y_n (deg 2i-1) and
c_1..c_n (deg 2i) with dy_i = c_i, dc_i = 0, modulo c-monomials whose index
sum exceeds n.  WO_n keeps only the odd y's, WGL_n none of them.
"""

from __future__ import annotations

import os
import re
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Iterable, Mapping

from .algebra.linalg import (
    Echelon,
    SparseMatrix,
    Vector,
    cohomology_basis,
    coordinates_mod,
    kernel_from_echelon,
    rref,
    solve,
)
from .algebra.rational import as_rational, format_rational

VARIANTS = ("W", "WO", "WGL")
DEFAULT_MAX_N = 4
_INCLUSIONS = {("WGL", "WO"), ("WO", "W"), ("WGL", "W")}


class GFError(ValueError):
    pass


class NotClosedError(GFError):
    pass


@dataclass(frozen=True)
class GFGenerator:
    kind: str
    index: int

    def __post_init__(self):
        if self.kind not in ("y", "c") or self.index < 1:
            raise GFError(f"bad generator {self.kind}{self.index}")

    @property
    def degree(self) -> int:
        return 2 * self.index - 1 if self.kind == "y" else 2 * self.index

    def __str__(self) -> str:
        return f"{self.kind}{self.index}"


@dataclass(frozen=True, order=True)
class GFMonomial:
    """y_{i1}...y_{ik} c_{j1}...c_{jm} with i strictly increasing and j weakly increasing."""

    y_part: tuple[int, ...] = ()
    c_part: tuple[int, ...] = ()

    def __post_init__(self):
        if list(self.y_part) != sorted(set(self.y_part)):
            raise GFError(f"y-indices must be strictly increasing: {self.y_part}")
        if list(self.c_part) != sorted(self.c_part):
            raise GFError(f"c-indices must be sorted: {self.c_part}")

    @property
    def degree(self) -> int:
        return sum(2 * i - 1 for i in self.y_part) + sum(2 * i for i in self.c_part)

    @property
    def c_weight(self) -> int:
        return sum(self.c_part)

    def sort_key(self) -> tuple:
        return (self.c_weight, self.c_part, self.y_part)

    def __str__(self) -> str:
        parts = [f"y{i}" for i in self.y_part] + [f"c{j}" for j in self.c_part]
        return "*".join(parts) if parts else "1"


ONE = GFMonomial()


@dataclass(frozen=True)
class GFComplexSpec:
    variant: str
    n: int

    @property
    def y_indices(self) -> tuple[int, ...]:
        if self.variant == "W":
            return tuple(range(1, self.n + 1))
        if self.variant == "WO":
            return tuple(range(1, self.n + 1, 2))
        return ()

    @property
    def generators(self) -> tuple[GFGenerator, ...]:
        return tuple(GFGenerator("y", i) for i in self.y_indices) + tuple(
            GFGenerator("c", j) for j in range(1, self.n + 1)
        )

    @property
    def top_degree(self) -> int:
        return sum(2 * i - 1 for i in self.y_indices) + 2 * self.n

    def admits(self, m: GFMonomial) -> bool:
        return set(m.y_part) <= set(self.y_indices) and m.c_weight <= self.n and all(
            1 <= j <= self.n for j in m.c_part
        )

    def is_subcomplex_of(self, other: "GFComplexSpec") -> bool:
        return self.n == other.n and (self.variant == other.variant or (self.variant, other.variant) in _INCLUSIONS)

    def __str__(self) -> str:
        return f"{self.variant}{self.n}"

    @cached_property
    def _bases(self) -> dict[int, list[GFMonomial]]:
        out: dict[int, list[GFMonomial]] = {}
        for c_part in _partitions_bounded(self.n):
            for k in range(len(self.y_indices) + 1):
                for ys in combinations(self.y_indices, k):
                    m = GFMonomial(ys, c_part)
                    out.setdefault(m.degree, []).append(m)
        for ms in out.values():
            ms.sort(key=GFMonomial.sort_key)
        return out

    @cached_property
    def _index(self) -> dict[GFMonomial, int]:
        return {m: i for ms in self._bases.values() for i, m in enumerate(ms)}


def _partitions_bounded(n: int) -> list[tuple[int, ...]]:
    """All weakly increasing tuples of positive integers with sum <= n."""
    out = [()]

    def grow(prefix: tuple[int, ...], lo: int, remaining: int):
        for j in range(lo, remaining + 1):
            t = prefix + (j,)
            out.append(t)
            grow(t, j, remaining - j)

    grow((), 1, n)
    return out


def build_complex(variant: str, n: int, max_n: int | None = None) -> GFComplexSpec:
    """
    The presentation of W_n, WO_n or WGL_n.

    ``n`` is capped at 4 by default (dimensions grow quickly); pass ``max_n``
    or set FOLIACOH_MAX_N to lift the cap.
    """
    if variant not in VARIANTS:
        raise GFError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if not isinstance(n, int) or n < 1:
        raise GFError(f"n must be a positive integer, got {n!r}")
    cap = max_n if max_n is not None else int(os.environ.get("FOLIACOH_MAX_N", DEFAULT_MAX_N))
    if n > cap:
        raise GFError(f"n={n} exceeds the cap {cap}; raise it explicitly (cost grows roughly like 2^n * p(n))")
    if n > DEFAULT_MAX_N:
        warnings.warn(f"n={n} above the default cap; expect large bases", RuntimeWarning, stacklevel=2)
    return GFComplexSpec(variant, n)


def basis(cx: GFComplexSpec, degree: int) -> list[GFMonomial]:
    if degree < 0:
        raise GFError("degree must be nonnegative")
    return list(cx._bases.get(degree, []))


def differentiate(cx: GFComplexSpec, m: GFMonomial) -> dict[GFMonomial, int]:
    """d(m) in the truncated algebra: d hits y_{s_k} with sign (-1)^k."""
    out: dict[GFMonomial, int] = {}
    for k, i in enumerate(m.y_part):
        c_part = tuple(sorted(m.c_part + (i,)))
        if sum(c_part) > cx.n:
            continue
        term = GFMonomial(m.y_part[:k] + m.y_part[k + 1:], c_part)
        out[term] = out.get(term, 0) + (-1) ** k
    return {t: c for t, c in out.items() if c}


def multiply(cx: GFComplexSpec, a: GFMonomial, b: GFMonomial) -> tuple[int, GFMonomial | None]:
    """Product a*b as (sign, monomial); (0, None) when it vanishes."""
    if set(a.y_part) & set(b.y_part):
        return 0, None
    c_part = tuple(sorted(a.c_part + b.c_part))
    if sum(c_part) > cx.n:
        return 0, None
    # move each y of b leftwards past the larger y's of a (c's are even and commute)
    sign = 1
    for j in b.y_part:
        if sum(1 for i in a.y_part if i > j) % 2:
            sign = -sign
    return sign, GFMonomial(tuple(sorted(a.y_part + b.y_part)), c_part)


def differential_matrix(cx: GFComplexSpec, degree: int) -> SparseMatrix:
    src = basis(cx, degree)
    tgt = basis(cx, degree + 1)
    idx = {m: i for i, m in enumerate(tgt)}
    mat = SparseMatrix(len(tgt), len(src))
    for j, m in enumerate(src):
        for t, c in differentiate(cx, m).items():
            mat.add(idx[t], j, c)
    return mat


@dataclass
class GFElement:
    complex: GFComplexSpec
    terms: dict[GFMonomial, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for m, c in self.terms.items():
            c = as_rational(c)
            if not self.complex.admits(m):
                raise GFError(f"monomial {m} not in {self.complex}")
            if c:
                clean[m] = c
        degrees = {m.degree for m in clean}
        if len(degrees) > 1:
            raise GFError(f"inhomogeneous element (degrees {sorted(degrees)})")
        self.terms = clean

    @property
    def degree(self) -> int | None:
        return next(iter(self.terms)).degree if self.terms else None

    def is_zero(self) -> bool:
        return not self.terms

    @classmethod
    def from_vector(cls, cx: GFComplexSpec, degree: int, v: Vector) -> "GFElement":
        b = basis(cx, degree)
        return cls(cx, {b[i]: c for i, c in v.items()})

    def to_vector(self, degree: int | None = None) -> Vector:
        deg = self.degree if degree is None else degree
        idx = {m: i for i, m in enumerate(basis(self.complex, deg or 0))}
        return {idx[m]: c for m, c in self.terms.items()}

    def d(self) -> "GFElement":
        out: dict[GFMonomial, Fraction] = {}
        for m, c in self.terms.items():
            for t, s in differentiate(self.complex, m).items():
                out[t] = out.get(t, 0) + s * c
        return GFElement(self.complex, out)

    def __add__(self, other: "GFElement") -> "GFElement":
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return GFElement(self.complex, out)

    def __neg__(self) -> "GFElement":
        return GFElement(self.complex, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "GFElement") -> "GFElement":
        return self + (-other)

    def scale(self, a) -> "GFElement":
        a = as_rational(a)
        return GFElement(self.complex, {m: a * c for m, c in self.terms.items()})

    def __mul__(self, other: "GFElement") -> "GFElement":
        out: dict[GFMonomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                s, m = multiply(self.complex, m1, m2)
                if s:
                    out[m] = out.get(m, 0) + s * c1 * c2
        return GFElement(self.complex, out)

    def in_complex(self, cx: GFComplexSpec) -> "GFElement":
        return GFElement(cx, dict(self.terms))

    def render(self) -> str:
        if not self.terms:
            return "0"
        out = ""
        for m in sorted(self.terms, key=GFMonomial.sort_key):
            c = self.terms[m]
            a = abs(c)
            body = format_rational(a) if m == ONE else (str(m) if a == 1 else f"{format_rational(a)}*{m}")
            if not out:
                out = body if c > 0 else "-" + body
            else:
                out += (" + " if c > 0 else " - ") + body
        return out

    def to_json_terms(self) -> dict[str, str]:
        return {str(m): format_rational(self.terms[m]) for m in sorted(self.terms, key=GFMonomial.sort_key)}


_TERM = re.compile(r"^(?:(?P<coef>\d+(?:/\d+)?)\s*\*?\s*)?(?P<mono>(?:[yc]\d+)(?:\s*\*\s*[yc]\d+)*)?$")


def parse_element(cx: GFComplexSpec, text: str) -> GFElement:
    """
    Parse a class expression such as ``y1*c1`` or ``1/2*y1*c1 + c2 - 3*c1^2``.

    Products follow the algebra's sign rules, so ``c1*y1`` equals ``y1*c1``
    and ``y3*y1`` equals ``-y1*y3``.
    """
    s = re.sub(r"\s+", "", text)
    if not s:
        raise GFError("empty class expression")
    s = re.sub(r"([yc]\d+)\^(\d+)", lambda mo: "*".join([mo.group(1)] * int(mo.group(2))), s)
    pieces = re.findall(r"[+-]?[^+-]+", s)
    if "".join(pieces) != s:
        raise GFError(f"cannot parse {text!r}")
    total = GFElement(cx, {})
    for piece in pieces:
        sign = -1 if piece.startswith("-") else 1
        body = piece.lstrip("+-")
        mo = _TERM.match(body)
        if not mo or (not mo.group("coef") and not mo.group("mono")):
            raise GFError(f"cannot parse term {piece!r}")
        coef = Fraction(mo.group("coef") or 1) * sign
        elem = GFElement(cx, {ONE: coef})
        for g in (mo.group("mono") or "").split("*"):
            if not g:
                continue
            kind, idx = g[0], int(g[1:])
            if kind == "y":
                gm = GFMonomial((idx,), ())
            else:
                gm = GFMonomial((), (idx,))
            if not (1 <= idx <= cx.n) or (kind == "y" and idx not in cx.y_indices):
                raise GFError(f"generator {g} is not in {cx}")
            elem = elem * GFElement(cx, {gm: 1})
        if total.terms and elem.terms and elem.degree != total.degree:
            raise GFError("class expression is not homogeneous")
        total = total + elem
    return total


@dataclass
class GradedCohomology:
    complex: GFComplexSpec
    betti: list[int]
    representatives: list[list[GFElement]]

    def to_json(self) -> dict:
        return {
            "variant": self.complex.variant,
            "n": self.complex.n,
            "betti": list(self.betti),
            "representatives": [
                {"degree": deg, "terms": rep.to_json_terms()}
                for deg, reps in enumerate(self.representatives)
                for rep in reps
            ],
        }


@dataclass
class _DegreeData:
    reps: list[Vector]
    boundaries: Echelon
    dim: int


def _degree_data(cx: GFComplexSpec, degree: int) -> _DegreeData:
    dim = len(basis(cx, degree))
    d_in = differential_matrix(cx, degree - 1) if degree > 0 else None
    d_out = differential_matrix(cx, degree)
    reps, boundaries = cohomology_basis(d_in, d_out, dim)
    return _DegreeData(reps, boundaries, dim)


def cohomology(cx: GFComplexSpec, max_degree: int | None = None) -> GradedCohomology:
    top = cx.top_degree
    if max_degree is None:
        max_degree = top
    if max_degree > top:
        raise GFError(f"max_degree {max_degree} exceeds top degree {top} of {cx}")
    betti, reps = [], []
    for deg in range(max_degree + 1):
        data = _degree_data(cx, deg)
        elems = [GFElement.from_vector(cx, deg, r) for r in data.reps]
        for e in elems:
            assert e.d().is_zero(), f"representative {e.render()} is not closed"
        betti.append(len(elems))
        reps.append(elems)
    return GradedCohomology(cx, betti, reps)


def class_coordinates(cx: GFComplexSpec, cocycle: GFElement, degree: int | None = None) -> list[Fraction]:
    """Coordinates of [cocycle] in the canonical representative basis of H^degree(cx)."""
    deg = cocycle.degree if degree is None else degree
    if deg is None:
        raise GFError("the zero element needs an explicit degree")
    data = _degree_data(cx, deg)
    v = cocycle.in_complex(cx).to_vector(deg)
    coords = coordinates_mod(data.reps, data.boundaries, v, data.dim)
    if coords is None:
        raise NotClosedError(f"{cocycle.render()} is not a cocycle of {cx}")
    return coords


@dataclass
class InducedMap:
    source: GFComplexSpec
    target: GFComplexSpec
    degree: int
    matrix: list[list[Fraction]]
    kernel: list[GFElement]
    source_representatives: list[GFElement]
    target_representatives: list[GFElement]

    @property
    def rank(self) -> int:
        return len(rref(SparseMatrix.from_dense(self.matrix, cols=len(self.source_representatives))))

    def is_zero(self) -> bool:
        return all(x == 0 for row in self.matrix for x in row)

    def is_isomorphism(self) -> bool:
        return len(self.source_representatives) == len(self.target_representatives) == self.rank


def induced_map(source: GFComplexSpec, target: GFComplexSpec, degree: int) -> InducedMap:
    """
    Matrix of H^degree(source) -> H^degree(target) for an inclusion of models,
    columns indexed by source representatives, rows by target ones, together
    with a kernel basis expressed as source cocycles.
    """
    if not source.is_subcomplex_of(target):
        raise GFError(f"{source} is not a subcomplex of {target}")
    src = _degree_data(source, degree)
    tgt = _degree_data(target, degree)
    src_elems = [GFElement.from_vector(source, degree, r) for r in src.reps]
    tgt_elems = [GFElement.from_vector(target, degree, r) for r in tgt.reps]
    columns = []
    for e in src_elems:
        coords = coordinates_mod(tgt.reps, tgt.boundaries, e.in_complex(target).to_vector(degree), tgt.dim)
        assert coords is not None
        columns.append(coords)
    matrix = [[columns[j][i] for j in range(len(columns))] for i in range(len(tgt.reps))]
    m = SparseMatrix.from_columns(len(tgt.reps), [{i: x for i, x in enumerate(c) if x} for c in columns])
    kernel = []
    for v in kernel_from_echelon(rref(m), len(src_elems)):
        acc = GFElement(source, {})
        for j, c in v.items():
            acc = acc + src_elems[j].scale(c)
        kernel.append(acc)
    return InducedMap(source, target, degree, matrix, kernel, src_elems, tgt_elems)


@dataclass
class TrivialityResult:
    trivial: bool
    primitive: GFElement | None = None
    coordinates: list[Fraction] | None = None

    def __bool__(self) -> bool:
        return self.trivial


def is_trivial_class(cx: GFComplexSpec, cocycle: GFElement) -> TrivialityResult:
    """Decide whether a cocycle is exact; certificate is a primitive b (d b = cocycle) or nonzero class coordinates."""
    cocycle = cocycle.in_complex(cx)
    if not cocycle.d().is_zero():
        raise NotClosedError(f"{cocycle.render()} is not closed in {cx}")
    if cocycle.is_zero():
        return TrivialityResult(True, GFElement(cx, {}))
    deg = cocycle.degree
    if deg == 0:
        return TrivialityResult(False, coordinates=class_coordinates(cx, cocycle))
    x = solve(differential_matrix(cx, deg - 1), cocycle.to_vector())
    if x is not None:
        b = GFElement.from_vector(cx, deg - 1, x)
        assert b.d().terms == cocycle.terms
        return TrivialityResult(True, b)
    return TrivialityResult(False, coordinates=class_coordinates(cx, cocycle))


def euler_characteristic(cx: GFComplexSpec) -> int:
    return sum((-1) ** deg * len(ms) for deg, ms in cx._bases.items())


def element(cx: GFComplexSpec, terms: Mapping[str, object] | Iterable[str]) -> GFElement:
    """Convenience: ``element(cx, {"y1*c1": 1})`` or ``element(cx, ["c2"])``."""
    if not isinstance(terms, Mapping):
        terms = {t: 1 for t in terms}
    out = GFElement(cx, {})
    for mono, c in terms.items():
        out = out + parse_element(cx, mono).scale(c)
    return out
