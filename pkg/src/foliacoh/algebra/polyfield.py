"""
Multivariate polynomials and rational functions over QQ.

Both are backed by sympy's sparse ``PolyRing``/``FracField`` with graded
lexicographic order over a declared variable sequence.  A ``RationalFunction``
is a ``FracElement``; this module adds field management (one cached field per
variable tuple, embedding into larger fields), substitution, and the
canonical normal form used for rendering and equality.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache, reduce
from math import gcd, lcm
from typing import Mapping, Sequence

from sympy import QQ
from sympy.polys.fields import FracElement, FracField, field as _field
from sympy.polys.orderings import grlex
from sympy.polys.rings import PolyElement

from .rational import as_rational, format_rational

RationalFunction = FracElement
MultiPoly = PolyElement


class SymbolicDomainError(ArithmeticError):
    """A substitution produced a zero denominator."""


@lru_cache(maxsize=None)
def coefficient_field(names: tuple[str, ...]) -> FracField:
    """The field QQ(names) with grlex order over ``names`` as given."""
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate variable names in {names}")
    if not names:
        raise ValueError("a coefficient field needs at least one variable")
    return _field(",".join(names), QQ, grlex)[0]


def field_names(K: FracField) -> tuple[str, ...]:
    return tuple(str(s) for s in K.symbols)


def merged_field(*fields: FracField) -> FracField:
    """Smallest cached field whose variables are the ordered union (first occurrence wins)."""
    names: list[str] = []
    for K in fields:
        for s in field_names(K):
            if s not in names:
                names.append(s)
    return coefficient_field(tuple(names))


def embed(f: FracElement, K: FracField) -> FracElement:
    if f.field is K:
        return f
    missing = set(field_names(f.field)) - set(field_names(K))
    if missing:
        raise ValueError(f"cannot embed: variables {sorted(missing)} not in target field")
    return f.set_field(K)


def gen(K: FracField, name: str) -> FracElement:
    return K.gens[field_names(K).index(name)]


def const(K: FracField, x) -> FracElement:
    x = as_rational(x)
    return K(QQ(x.numerator, x.denominator))


def _eval_poly(p: PolyElement, values: Sequence[FracElement], K: FracField) -> FracElement:
    powers: dict[tuple[int, int], FracElement] = {}

    def power(i: int, e: int) -> FracElement:
        key = (i, e)
        if key not in powers:
            powers[key] = values[i] ** e
        return powers[key]

    out = K.zero
    for monom, c in p.terms():
        t = K(c)
        for i, e in enumerate(monom):
            if e:
                t = t * power(i, e)
        out = out + t
    return out


def substitute(f: FracElement, subst: Mapping[str, FracElement], K: FracField | None = None) -> FracElement:
    """
    Replace variables of ``f`` by the given rational functions.

    Variables not in ``subst`` are kept (mapped to the same-named generator of
    the target field).  Raises SymbolicDomainError on a zero denominator.
    """
    if K is None:
        fields = [v.field for v in subst.values()] or [f.field]
        K = merged_field(f.field, *fields)
    values = []
    for name in field_names(f.field):
        if name in subst:
            values.append(embed(subst[name], K))
        else:
            values.append(gen(K, name))
    num = _eval_poly(f.numer, values, K)
    den = _eval_poly(f.denom, values, K)
    if den == 0:
        raise SymbolicDomainError(f"substitution makes the denominator {f.denom.as_expr()} vanish")
    return num / den


def normal_form(f: FracElement) -> tuple[dict[tuple[int, ...], int], dict[tuple[int, ...], int]]:
    """
    Canonical (numerator, denominator) as integer-coefficient term maps:
    coefficients coprime overall, leading coefficient of the denominator
    (grlex) positive.
    """
    num = {m: as_rational(c) for m, c in f.numer.terms()}
    den = {m: as_rational(c) for m, c in f.denom.terms()}
    if not num:
        return {}, {(0,) * f.field.ngens: 1}
    allc = list(num.values()) + list(den.values())
    scale = reduce(lcm, (c.denominator for c in allc), 1)
    inum = {m: int(c * scale) for m, c in num.items()}
    iden = {m: int(c * scale) for m, c in den.items()}
    g = reduce(gcd, list(inum.values()) + list(iden.values()))
    lead = max(iden, key=lambda m: (sum(m), m))
    if iden[lead] < 0:
        g = -g
    return ({m: c // g for m, c in inum.items()}, {m: c // g for m, c in iden.items()})


def _sorted_terms(terms: dict[tuple[int, ...], int]) -> list[tuple[tuple[int, ...], int]]:
    return sorted(terms.items(), key=lambda t: (sum(t[0]), t[0]), reverse=True)


def render_monomial(m: tuple[int, ...], names: Sequence[str]) -> str:
    parts = []
    for name, e in zip(names, m):
        if e == 1:
            parts.append(name)
        elif e:
            parts.append(f"{name}^{e}")
    return "*".join(parts)


def render_poly_terms(terms: dict[tuple[int, ...], object], names: Sequence[str]) -> str:
    if not terms:
        return "0"
    out = []
    for m, c in _sorted_terms(terms):
        c = as_rational(c)
        mono = render_monomial(m, names)
        sign = "-" if c < 0 else "+"
        a = abs(c)
        if not mono:
            body = format_rational(a)
        elif a == 1:
            body = mono
        else:
            body = f"{format_rational(a)}*{mono}"
        out.append((sign, body))
    first_sign, first = out[0]
    s = ("-" if first_sign == "-" else "") + first
    for sign, body in out[1:]:
        s += f" {sign} {body}"
    return s


def _is_bare_monomial(terms: dict[tuple[int, ...], int]) -> bool:
    if len(terms) != 1:
        return False
    (m, c), = terms.items()
    return c == 1 and sum(1 for e in m if e) <= 1


def render(f: FracElement) -> str:
    """Canonical text such as ``-1/x1^3``, ``2*x2/x1^3`` or ``(x0 + 1)/(2*x1)``."""
    num, den = normal_form(f)
    names = field_names(f.field)
    ns = render_poly_terms(num, names)
    if den == {(0,) * len(names): 1}:
        return ns
    ds = render_poly_terms(den, names)
    if len(num) > 1:
        ns = f"({ns})"
    if not _is_bare_monomial(den):
        ds = f"({ds})"
    return f"{ns}/{ds}"


def to_json(f: FracElement) -> dict:
    num, den = normal_form(f)
    names = field_names(f.field)
    enc = lambda terms: {render_monomial(m, names) or "1": format_rational(c) for m, c in _sorted_terms(terms)}
    return {"numerator": enc(num), "denominator": enc(den)}


def from_expr(K: FracField, text: str) -> FracElement:
    """Parse an expression (``^`` or ``**`` for powers) into ``K``."""
    from sympy import sympify

    expr = sympify(text.replace("^", "**"), locals={n: s for n, s in zip(field_names(K), K.symbols)})
    return K.from_expr(expr)


def rational_value(f: FracElement) -> Fraction | None:
    """The constant value of ``f`` if it is a constant, else None."""
    if f.numer.is_ground and f.denom.is_ground:
        return as_rational(f.numer.LC if f.numer else 0) / as_rational(f.denom.LC)
    return None
