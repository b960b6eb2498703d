"""Exact rational scalars and their canonical text encoding ("p/q", or "p" when q = 1)."""

from __future__ import annotations

from fractions import Fraction

ExactRational = Fraction


def as_rational(x) -> Fraction:
    """Coerce ints, Fractions, strings and gmpy2 ``mpq`` values to ``Fraction``."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    num = getattr(x, "numerator", None)
    den = getattr(x, "denominator", None)
    if num is not None and den is not None:
        return Fraction(int(num), int(den))
    raise TypeError(f"cannot convert {x!r} to an exact rational")


def format_rational(x) -> str:
    x = as_rational(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def parse_rational(text: str) -> Fraction:
    return Fraction(text.strip())
