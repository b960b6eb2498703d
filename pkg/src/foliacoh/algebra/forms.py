"""Differential forms with rational-function coefficients on a declared coordinate list."""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

from sympy.polys.fields import FracElement, FracField

from .polyfield import (
    coefficient_field,
    const,
    embed,
    field_names,
    gen,
    merged_field,
    render,
    substitute,
    to_json,
)

WedgeIndex = tuple[int, ...]


def sort_sign(idx: Sequence[int]) -> tuple[int, WedgeIndex]:
    """Sign of the sorting permutation and the sorted tuple; sign 0 on a repeated index."""
    idx = list(idx)
    if len(set(idx)) != len(idx):
        return 0, ()
    sign = 1
    # insertion sort, counting transpositions
    for i in range(1, len(idx)):
        j = i
        while j > 0 and idx[j - 1] > idx[j]:
            idx[j - 1], idx[j] = idx[j], idx[j - 1]
            sign = -sign
            j -= 1
    return sign, tuple(idx)


class ExteriorForm:
    """
    A homogeneous q-form  sum_I f_I dx_{i1}^...^dx_{iq}  with I strictly increasing.

    ``field`` is the coefficient field; it contains every coordinate as a
    variable and may carry extra symbolic constants (never differentiated).
    """

    __slots__ = ("coords", "field", "degree", "terms")

    def __init__(self, coords: Sequence[str], degree: int, terms: Mapping[Iterable[int], FracElement] | None = None,
                 field: FracField | None = None):
        self.coords = tuple(coords)
        self.field = field if field is not None else coefficient_field(self.coords)
        missing = set(self.coords) - set(field_names(self.field))
        if missing:
            raise ValueError(f"coefficient field lacks coordinates {sorted(missing)}")
        self.degree = degree
        self.terms: dict[WedgeIndex, FracElement] = {}
        for idx, c in (terms or {}).items():
            idx = tuple(idx)
            if len(idx) != degree:
                raise ValueError(f"index {idx} has length {len(idx)}, expected {degree}")
            if any(not 0 <= i < len(self.coords) for i in idx):
                raise ValueError(f"index {idx} out of range")
            sign, key = sort_sign(idx)
            if not sign:
                continue
            c = embed(self.field(c) if not isinstance(c, FracElement) else c, self.field)
            s = self.terms.get(key, self.field.zero) + (c if sign > 0 else -c)
            if s == 0:
                self.terms.pop(key, None)
            else:
                self.terms[key] = s

    # construction helpers

    @classmethod
    def zero(cls, coords: Sequence[str], degree: int, field: FracField | None = None) -> "ExteriorForm":
        return cls(coords, degree, {}, field)

    @classmethod
    def function(cls, coords: Sequence[str], f, field: FracField | None = None) -> "ExteriorForm":
        K = field if field is not None else coefficient_field(tuple(coords))
        if not isinstance(f, FracElement):
            f = const(K, f)
        return cls(coords, 0, {(): f}, K)

    @classmethod
    def differential(cls, coords: Sequence[str], i: int | str, field: FracField | None = None) -> "ExteriorForm":
        coords = tuple(coords)
        if isinstance(i, str):
            i = coords.index(i)
        K = field if field is not None else coefficient_field(coords)
        return cls(coords, 1, {(i,): K.one}, K)

    def _check(self, other: "ExteriorForm") -> None:
        if self.coords != other.coords:
            raise ValueError(f"coordinate mismatch: {self.coords} vs {other.coords}")

    def with_field(self, K: FracField) -> "ExteriorForm":
        if K is self.field:
            return self
        return ExteriorForm(self.coords, self.degree, {i: embed(c, K) for i, c in self.terms.items()}, K)

    def _aligned(self, other: "ExteriorForm") -> tuple["ExteriorForm", "ExteriorForm"]:
        self._check(other)
        if self.field is other.field:
            return self, other
        K = merged_field(self.field, other.field)
        return self.with_field(K), other.with_field(K)

    # algebra

    def __add__(self, other: "ExteriorForm") -> "ExteriorForm":
        a, b = self._aligned(other)
        if a.degree != b.degree:
            if not a.terms:
                return b
            if not b.terms:
                return a
            raise ValueError("cannot add forms of different degree")
        terms = dict(a.terms)
        for i, c in b.terms.items():
            terms[i] = terms.get(i, a.field.zero) + c
        return ExteriorForm(a.coords, a.degree, {i: c for i, c in terms.items() if c != 0}, a.field)

    def __neg__(self) -> "ExteriorForm":
        return ExteriorForm(self.coords, self.degree, {i: -c for i, c in self.terms.items()}, self.field)

    def __sub__(self, other: "ExteriorForm") -> "ExteriorForm":
        return self + (-other)

    def scale(self, f) -> "ExteriorForm":
        if isinstance(f, FracElement):
            K = merged_field(self.field, f.field) if f.field is not self.field else self.field
            f = embed(f, K)
            a = self.with_field(K)
        else:
            a = self
            f = const(self.field, f)
        return ExteriorForm(a.coords, a.degree, {i: c * f for i, c in a.terms.items()}, a.field)

    def __mul__(self, f) -> "ExteriorForm":
        return self.scale(f)

    __rmul__ = __mul__

    def wedge(self, other: "ExteriorForm") -> "ExteriorForm":
        return wedge(self, other)

    def __xor__(self, other: "ExteriorForm") -> "ExteriorForm":
        return wedge(self, other)

    def d(self) -> "ExteriorForm":
        return exterior_derivative(self)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExteriorForm):
            return NotImplemented
        if self.coords != other.coords:
            return False
        diff = self - other
        return diff.is_zero() and (self.degree == other.degree or not self.terms)

    def __hash__(self):
        raise TypeError("ExteriorForm is not hashable")

    def ratio_to(self, other: "ExteriorForm") -> FracElement | None:
        """The function r with self = r * other, if one exists (None otherwise or if other is zero)."""
        a, b = self._aligned(other)
        if a.degree != b.degree or not b.terms or set(a.terms) != set(b.terms):
            return None
        it = iter(b.terms)
        k = next(it)
        r = a.terms[k] / b.terms[k]
        for k in it:
            if a.terms[k] != r * b.terms[k]:
                return None
        return r

    def render(self) -> str:
        if not self.terms:
            return "0"
        out = ""
        for idx in sorted(self.terms):
            wedge_str = "^".join(f"d{self.coords[i]}" for i in idx)
            f = self.terms[idx]
            coef = render(f)
            if wedge_str and f.denom == 1 and len(f.numer) > 1:
                coef = f"({coef})"
            if wedge_str and coef in ("1", "-1"):
                term = wedge_str if coef == "1" else "-" + wedge_str
            else:
                term = f"{coef} * {wedge_str}" if wedge_str else coef
            if not out:
                out = term
            elif term.startswith("-"):
                out += " - " + term[1:]
            else:
                out += " + " + term
        return out

    def to_json(self) -> dict:
        return {
            "coordinates": list(self.coords),
            "degree": self.degree,
            "terms": [
                {"wedge": [self.coords[i] for i in idx], "coefficient": to_json(self.terms[idx])}
                for idx in sorted(self.terms)
            ],
        }

    def __repr__(self) -> str:
        return f"ExteriorForm(deg={self.degree}, {self.render()})"


def wedge(a: ExteriorForm, b: ExteriorForm) -> ExteriorForm:
    a, b = a._aligned(b)
    terms: dict[WedgeIndex, FracElement] = {}
    for i, f in a.terms.items():
        for j, g in b.terms.items():
            sign, key = sort_sign(i + j)
            if not sign:
                continue
            c = f * g
            terms[key] = terms.get(key, a.field.zero) + (c if sign > 0 else -c)
    return ExteriorForm(a.coords, a.degree + b.degree, {k: c for k, c in terms.items() if c != 0}, a.field)


def exterior_derivative(a: ExteriorForm) -> ExteriorForm:
    gens = [gen(a.field, x) for x in a.coords]
    terms: dict[WedgeIndex, FracElement] = {}
    for idx, f in a.terms.items():
        for j, x in enumerate(gens):
            if j in idx:
                continue
            df = f.diff(x)
            if df == 0:
                continue
            sign, key = sort_sign((j,) + idx)
            terms[key] = terms.get(key, a.field.zero) + (df if sign > 0 else -df)
    return ExteriorForm(a.coords, a.degree + 1, {k: c for k, c in terms.items() if c != 0}, a.field)


def pullback(a: ExteriorForm, subst: Mapping[str, FracElement], field: FracField | None = None) -> ExteriorForm:
    """
    Pull ``a`` back along the map whose coordinate expressions are ``subst``:
    coefficients are composed with ``subst`` and each dx_i becomes d(subst[x_i]).

    Coordinates absent from ``subst`` map to themselves.  With this convention
    pullback(pullback(a, s), t) == pullback(a, compose_substitutions(s, t)).
    """
    fields = [v.field for v in subst.values() if isinstance(v, FracElement)]
    K = field if field is not None else merged_field(a.field, *fields)
    full = {x: embed(subst[x], K) if x in subst else gen(K, x) for x in a.coords}
    for name in field_names(a.field):
        if name not in full and name in subst:
            full[name] = embed(subst[name], K)
    differentials: dict[int, ExteriorForm] = {}

    def dsub(i: int) -> ExteriorForm:
        if i not in differentials:
            differentials[i] = exterior_derivative(ExteriorForm(a.coords, 0, {(): full[a.coords[i]]}, K))
        return differentials[i]

    out = ExteriorForm.zero(a.coords, a.degree, K)
    for idx, f in a.terms.items():
        term = ExteriorForm(a.coords, 0, {(): substitute(f, full, K)}, K)
        for i in idx:
            term = wedge(term, dsub(i))
        out = out + term
    return out


def compose_substitutions(first: Mapping[str, FracElement], then: Mapping[str, FracElement]) -> dict[str, FracElement]:
    """The substitution equivalent to pulling back by ``first`` and then by ``then``."""
    out = {x: substitute(v, then) for x, v in first.items()}
    for x, v in then.items():
        out.setdefault(x, v)
    return out
