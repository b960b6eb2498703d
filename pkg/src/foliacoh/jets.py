"""
Truncated jets, prolongation, the Gelfand-Kazhdan form and the realization of
Gelfand-Fuchs cocycles as differential forms on jet coordinates.

Codimension one is fully supported.  Jet coordinate x_k is the k-th
derivative at 0 of a formal map u -> f(u), so f(u) = sum_k x_k u^k / k!.
For n >= 2 only the first-order part of the tautological form (and the
classes y_1, c_1..c_n built from it) is available; the jet symbols then stop
at order two.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import factorial
from typing import Sequence

from sympy.polys.fields import FracElement, FracField

from .algebra.forms import ExteriorForm, exterior_derivative, pullback, wedge
from .algebra.polyfield import coefficient_field, const, embed, gen, merged_field, rational_value
from .gelfand_fuchs import GFElement, GFMonomial


class JetError(ValueError):
    pass


@dataclass(frozen=True)
class JetCoordinates:
    n: int
    K: int

    def __post_init__(self):
        if self.n < 1:
            raise JetError("source dimension must be positive")
        if self.K < 0:
            raise JetError("truncation order must be nonnegative")

    @cached_property
    def symbols(self) -> tuple[str, ...]:
        if self.n == 1:
            return tuple(f"x{k}" for k in range(self.K + 1))
        r = range(1, self.n + 1)
        syms = [f"f{a}" for a in r]
        if self.K >= 1:
            syms += [f"f{a}_{b}" for a in r for b in r]
        if self.K >= 2:
            syms += [f"f{a}_{b}{c}" for a in r for b in r for c in r if b <= c]
        return tuple(syms)

    @property
    def field(self) -> FracField:
        return coefficient_field(self.symbols)

    def x(self, k: int) -> FracElement:
        return gen(self.field, f"x{k}")

    def dx(self, k: int) -> ExteriorForm:
        return ExteriorForm.differential(self.symbols, f"x{k}", self.field)


# --- truncated power series (ordinary coefficients, index = power of u) -----


def _series_mul(a: Sequence, b: Sequence, N: int, zero) -> list:
    out = [zero] * (N + 1)
    for i, ai in enumerate(a[: N + 1]):
        if ai == 0:
            continue
        for j, bj in enumerate(b[: N + 1 - i]):
            if bj == 0:
                continue
            out[i + j] = out[i + j] + ai * bj
    return out


def _series_inverse(a: Sequence[FracElement], N: int, K: FracField) -> list[FracElement]:
    if a[0] == 0:
        raise JetError("series with vanishing constant term is not invertible")
    inv = [K.zero] * (N + 1)
    inv[0] = 1 / a[0]
    for k in range(1, N + 1):
        s = K.zero
        for i in range(1, min(k, len(a) - 1) + 1):
            s = s + a[i] * inv[k - i]
        inv[k] = -s * inv[0]
    return inv


def _compose_outer(outer_taylor: Sequence[FracElement], inner: Sequence[FracElement], N: int, K: FracField) -> list:
    """sum_j outer_taylor[j] * inner^j with inner[0] == 0, truncated at u^N."""
    out = [K.zero] * (N + 1)
    power = [K.one] + [K.zero] * N
    for j, c in enumerate(outer_taylor):
        if j > N:
            break
        if c != 0:
            for k in range(N + 1):
                if power[k] != 0:
                    out[k] = out[k] + c * power[k]
        power = _series_mul(power, inner, N, K.zero)
    return out


def _poly_derivative_at(coeffs: Sequence[FracElement], x: FracElement, j: int, K: FracField) -> FracElement:
    """j-th derivative of sum_m coeffs[m] v^m, evaluated at v = x."""
    out = K.zero
    for m in range(j, len(coeffs)):
        c = coeffs[m]
        if c == 0:
            continue
        out = out + c * (factorial(m) // factorial(m - j)) * x ** (m - j)
    return out


# --- symbolic maps acting on jets -------------------------------------------


def _to_field(coeffs: Sequence, K: FracField) -> list[FracElement]:
    return [embed(c, K) if isinstance(c, FracElement) else const(K, c) for c in coeffs]


def _param_field(coords: JetCoordinates, coeffs: Sequence) -> FracField:
    fields = [c.field for c in coeffs if isinstance(c, FracElement)]
    return merged_field(coords.field, *fields)


def prolong(h: Sequence, coords: JetCoordinates) -> dict[str, FracElement]:
    """
    Substitution induced on jets by postcomposition f -> h o f, where
    h(v) = sum_m h[m] v^m (entries may involve symbolic constants).

    x_k maps to the k-th derivative of h o f at 0 (Faa di Bruno).
    """
    if coords.n != 1:
        raise JetError("prolongation is implemented for codimension one")
    if len(h) < 2 or h[1] == 0:
        raise JetError("h is not regular: vanishing linear coefficient")
    K = _param_field(coords, h)
    hc = _to_field(h, K)
    x = [gen(K, s) for s in coords.symbols]
    N = coords.K
    taylor = [_poly_derivative_at(hc, x[0], j, K) / factorial(j) for j in range(N + 1)]
    inner = [K.zero] + [x[k] / factorial(k) for k in range(1, N + 1)]
    comp = _compose_outer(taylor, inner, N, K)
    return {f"x{k}": comp[k] * factorial(k) for k in range(N + 1)}


def precompose(g: Sequence, coords: JetCoordinates) -> dict[str, FracElement]:
    """
    Substitution induced by reparametrizing the source, f -> f o g with
    g(u) = sum_{m>=1} g[m] u^m; g = [0, lam] is the GL(1) action x_k -> lam^k x_k.
    """
    if coords.n != 1:
        raise JetError("source reparametrization is implemented for codimension one")
    if len(g) < 2 or g[0] != 0:
        raise JetError("g must fix the origin")
    if g[1] == 0:
        raise JetError("g is not regular: vanishing linear coefficient")
    K = _param_field(coords, g)
    gc = _to_field(g, K)
    N = coords.K
    outer = [gen(K, f"x{k}") / factorial(k) for k in range(N + 1)]
    comp = _compose_outer(outer, gc + [K.zero] * max(0, N + 1 - len(gc)), N, K)
    return {f"x{k}": comp[k] * factorial(k) for k in range(N + 1)}


@dataclass(frozen=True)
class JetMap:
    """A named symbolic diffeomorphism acting on jets (by postcomposition or source reparametrization)."""

    name: str
    kind: str
    coeffs: tuple

    def substitution(self, coords: JetCoordinates) -> dict[str, FracElement]:
        if self.kind == "post":
            return prolong(self.coeffs, coords)
        if self.kind == "pre":
            return precompose(self.coeffs, coords)
        raise JetError(f"unknown map kind {self.kind!r}")


def symbolic_constants(*names: str) -> tuple[FracElement, ...]:
    K = coefficient_field(tuple(names))
    return tuple(K.gens)


def generic_polynomial(degree: int, prefix: str = "b") -> JetMap:
    cs = symbolic_constants(*(f"{prefix}{m}" for m in range(degree + 1)))
    return JetMap(f"generic degree-{degree} h", "post", cs)


def scaling(name: str = "lam") -> JetMap:
    (lam,) = symbolic_constants(name)
    return JetMap("GL(1) scaling u -> lam*u", "pre", (0, lam))


def reflection() -> JetMap:
    return JetMap("O(1) reflection u -> -u", "pre", (0, -1))


# --- vector fields and the tautological form --------------------------------


@dataclass(frozen=True)
class TruncatedVectorField:
    """sum_a P_a(u) d/du_a with polynomial components truncated at degree K."""

    n: int
    K: int
    components: tuple  # per a: dict exponent-tuple -> Fraction

    @classmethod
    def monomial(cls, n: int, K: int, exponent: Sequence[int], direction: int, coeff=1) -> "TruncatedVectorField":
        comps = [dict() for _ in range(n)]
        if sum(exponent) <= K:
            comps[direction] = {tuple(exponent): Fraction(coeff)}
        return cls(n, K, tuple(comps))

    def bracket(self, other: "TruncatedVectorField") -> "TruncatedVectorField":
        def apply(X, P):
            # X(P) = sum_b X^b dP/du_b
            out: dict = {}
            for b in range(self.n):
                for ex, cx in X.components[b].items():
                    for ep, cp in P.items():
                        if ep[b] == 0:
                            continue
                        e = tuple(ex[i] + ep[i] - (1 if i == b else 0) for i in range(self.n))
                        if sum(e) > self.K:
                            continue
                        out[e] = out.get(e, 0) + cx * cp * ep[b]
            return out

        comps = []
        for a in range(self.n):
            p = apply(self, other.components[a])
            for e, c in apply(other, self.components[a]).items():
                p[e] = p.get(e, 0) - c
            comps.append({e: c for e, c in p.items() if c})
        return TruncatedVectorField(self.n, self.K, tuple(comps))


def w1_basis(k: int, K: int) -> TruncatedVectorField:
    """e_k = u^k/k! d/du."""
    return TruncatedVectorField.monomial(1, K, (k,), 0, Fraction(1, factorial(k)))


def w1_structure_constants(K: int) -> dict[tuple[int, int], dict[int, Fraction]]:
    """[e_i, e_j] = sum_k c[i, j][k] e_k for i < j, i + j - 1 <= K."""
    out = {}
    for i in range(K + 1):
        for j in range(i + 1, K + 2 - i):
            br = w1_basis(i, K + 1).bracket(w1_basis(j, K + 1))
            coeffs = {e[0]: c * factorial(e[0]) for e, c in br.components[0].items() if e[0] <= K}
            out[(i, j)] = coeffs
    return out


@dataclass
class TautologicalForm:
    coords: JetCoordinates
    components: list[ExteriorForm] = field(default_factory=list)
    first_order: list[list[ExteriorForm]] | None = None

    def __getitem__(self, k: int) -> ExteriorForm:
        return self.components[k]


def tautological_form(coords: JetCoordinates) -> TautologicalForm:
    """
    theta(u) = Df(u)^{-1} . delta f(u), the Gelfand-Kazhdan form on jets.

    For n = 1 returns theta_0 .. theta_{K-1} (theta = sum theta_k u^k / k!);
    for n >= 2 returns theta^(0) as ``components`` and the matrix theta^(1).
    """
    if coords.K < 2:
        raise JetError("the tautological form needs jets of order K >= 2")
    if coords.n > 1:
        return _tautological_multi(coords)
    K = coords.field
    C = coords.symbols
    N = coords.K - 1
    deriv = [gen(K, f"x{k + 1}") / factorial(k) for k in range(N + 1)]
    inv = _series_inverse(deriv, N, K)
    comps = []
    for k in range(N + 1):
        form = ExteriorForm.zero(C, 1, K)
        for i in range(k + 1):
            if inv[k - i] != 0:
                form = form + ExteriorForm(C, 1, {(i,): inv[k - i] / factorial(i)}, K)
        comps.append(form.scale(factorial(k)))
    return TautologicalForm(coords, comps)


def _matrix_inverse(m: list[list[FracElement]], K: FracField) -> list[list[FracElement]]:
    n = len(m)
    a = [row[:] + [K.one if i == j else K.zero for j in range(n)] for i, row in enumerate(m)]
    for col in range(n):
        piv = next(r for r in range(col, n) if a[r][col] != 0)
        a[col], a[piv] = a[piv], a[col]
        p = a[col][col]
        a[col] = [v / p for v in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [v - f * w for v, w in zip(a[r], a[col])]
    return [row[n:] for row in a]


def _tautological_multi(coords: JetCoordinates) -> TautologicalForm:
    n = coords.n
    K = coords.field
    C = coords.symbols
    g = lambda s: gen(K, s)
    d = lambda s: ExteriorForm.differential(C, s, K)
    X = [[g(f"f{a}_{b}") for b in range(1, n + 1)] for a in range(1, n + 1)]
    Xi = _matrix_inverse(X, K)

    def second(a: int, b: int, c: int) -> str:
        b, c = min(b, c), max(b, c)
        return f"f{a}_{b}{c}"

    zero = ExteriorForm.zero(C, 1, K)
    theta0 = []
    for a in range(n):
        acc = zero
        for b in range(n):
            acc = acc + d(f"f{b + 1}").scale(Xi[a][b])
        theta0.append(acc)
    # theta^(1)[c][a] = coefficient of u_c in theta^a
    #                 = (X^-1 dX)[a][c] - sum_{b,e} X^-1[a][b] X2[b][e][c] theta0[e]
    # stored with the derivative index first so that R = d theta - theta ^ theta
    theta1 = [[zero] * n for _ in range(n)]
    for a in range(n):
        for c in range(n):
            acc = zero
            for b in range(n):
                acc = acc + d(f"f{b + 1}_{c + 1}").scale(Xi[a][b])
                for e in range(n):
                    acc = acc - theta0[e].scale(Xi[a][b] * g(second(b + 1, e + 1, c + 1)))
            theta1[c][a] = acc
    return TautologicalForm(coords, theta0, theta1)


def first_order_matrix(tf: TautologicalForm) -> list[list[ExteriorForm]]:
    if tf.first_order is not None:
        return tf.first_order
    return [[tf.components[1]]]


def _matmul_forms(A, B, zero_degree: int, coords, K) -> list[list[ExteriorForm]]:
    n = len(A)
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = ExteriorForm.zero(coords, zero_degree, K)
            for k in range(n):
                acc = acc + wedge(A[i][k], B[k][j])
            row.append(acc)
        out.append(row)
    return out


def curvature(tf: TautologicalForm) -> list[list[ExteriorForm]]:
    """R = d theta^(1) - theta^(1) ^ theta^(1)."""
    A = first_order_matrix(tf)
    C, K = tf.coords.symbols, tf.coords.field
    AA = _matmul_forms(A, A, 2, C, K)
    return [[exterior_derivative(A[i][j]) - AA[i][j] for j in range(len(A))] for i in range(len(A))]


def chern_forms(tf: TautologicalForm) -> list[ExteriorForm]:
    """[1, c_1, ..., c_n] with det(1 + t R) = sum_i c_i t^i, via Newton's identities."""
    R = curvature(tf)
    n = len(R)
    C, K = tf.coords.symbols, tf.coords.field
    power = R
    traces = []
    for k in range(1, n + 1):
        tr = ExteriorForm.zero(C, 2 * k, K)
        for i in range(n):
            tr = tr + power[i][i]
        traces.append(tr)
        if k < n:
            power = _matmul_forms(power, R, 2 * (k + 1), C, K)
    cs = [ExteriorForm.function(C, 1, K)]
    for k in range(1, n + 1):
        acc = ExteriorForm.zero(C, 2 * k, K)
        for i in range(1, k + 1):
            term = wedge(cs[k - i], traces[i - 1])
            acc = acc + (term if i % 2 else -term)
        cs.append(acc.scale(Fraction(1, k)))
    return cs


def trace_form(tf: TautologicalForm) -> ExteriorForm:
    A = first_order_matrix(tf)
    acc = ExteriorForm.zero(tf.coords.symbols, 1, tf.coords.field)
    for i in range(len(A)):
        acc = acc + A[i][i]
    return acc


def required_order(cocycle: GFElement) -> int:
    return max(2, cocycle.degree or 0)


class _Realizer:
    def __init__(self, coords: JetCoordinates):
        self.coords = coords
        self.tf = tautological_form(coords)
        self._y1 = None
        self._c = None

    @property
    def y1(self) -> ExteriorForm:
        if self._y1 is None:
            self._y1 = trace_form(self.tf)
        return self._y1

    def c(self, i: int) -> ExteriorForm:
        if self._c is None:
            self._c = chern_forms(self.tf)
        return self._c[i]

    def monomial(self, m: GFMonomial) -> ExteriorForm:
        C, K = self.coords.symbols, self.coords.field
        out = ExteriorForm.function(C, 1, K)
        for i in m.y_part:
            out = wedge(out, self.y1)
        for j in m.c_part:
            out = wedge(out, self.c(j))
        return out


def realize_class(cocycle: GFElement, coords: JetCoordinates) -> ExteriorForm:
    """
    The differential form on jets representing a cochain in y_1, c_1..c_n:
    y_1 -> tr theta^(1), c_i -> i-th elementary invariant of the curvature,
    products -> wedge products.
    """
    cx = cocycle.complex
    if cx.n != coords.n:
        raise JetError(f"cocycle lives in codimension {cx.n}, jets in {coords.n}")
    for m in cocycle.terms:
        if any(i >= 2 for i in m.y_part):
            raise JetError(f"no realization rule for y_i with i >= 2 (term {m})")
    need = required_order(cocycle) if cocycle.terms else 2
    if coords.K < need:
        raise JetError(f"jets of order {coords.K} are too short; need K >= {need}")
    r = _Realizer(coords)
    deg = cocycle.degree or 0
    out = ExteriorForm.zero(coords.symbols, deg, coords.field)
    for m, c in cocycle.terms.items():
        out = out + r.monomial(m).scale(c)
    return out


def quotient_coordinates(coords: JetCoordinates) -> dict[str, FracElement]:
    """Invariant coordinates on S'(U): y0 = x0 and y_k = x_k / x1^k for 2 <= k <= K."""
    if coords.n != 1:
        raise JetError("quotient coordinates are implemented for codimension one")
    x = [coords.x(k) for k in range(coords.K + 1)]
    out = {"y0": x[0]}
    for k in range(2, coords.K + 1):
        out[f"y{k}"] = x[k] / x[1] ** k
    return out


def chern_form_quotient(coords: JetCoordinates) -> ExteriorForm:
    """dy2 ^ dy0 expanded in jet coordinates."""
    if coords.n != 1 or coords.K < 2:
        raise JetError("needs codimension one jets with K >= 2")
    q = quotient_coordinates(coords)
    C, K = coords.symbols, coords.field
    dy2 = exterior_derivative(ExteriorForm.function(C, q["y2"], K))
    dy0 = exterior_derivative(ExteriorForm.function(C, q["y0"], K))
    return wedge(dy2, dy0)


@dataclass
class InvarianceReport:
    invariant: bool
    checked: list[str]
    failed: str | None = None
    residual: ExteriorForm | None = None

    def to_json(self) -> dict:
        return {
            "invariant": self.invariant,
            "checked": list(self.checked),
            "failed": self.failed,
            "residual": self.residual.render() if self.residual is not None else None,
        }


def check_invariance(form: ExteriorForm, coords: JetCoordinates, family: Sequence[JetMap]) -> InvarianceReport:
    """Check pullback(form, map) == form identically for each map; stop at the first failure."""
    if tuple(form.coords) != coords.symbols:
        raise JetError("form is not written in these jet coordinates")
    checked = []
    for h in family:
        subst = h.substitution(coords)
        residual = pullback(form, subst) - form
        checked.append(h.name)
        if not residual.is_zero():
            return InvarianceReport(False, checked, h.name, residual)
    return InvarianceReport(True, checked)


def maurer_cartan_residual(tf: TautologicalForm, k: int) -> ExteriorForm:
    """d theta_k - sum_{i<j} c^k_{ij} theta_i ^ theta_j (zero when the structure equation holds)."""
    K = tf.coords.K
    if k > K - 2:
        raise JetError(f"theta_{k + 1} is not available at truncation K={K}")
    consts = w1_structure_constants(K)
    rhs = ExteriorForm.zero(tf.coords.symbols, 2, tf.coords.field)
    for (i, j), coeffs in consts.items():
        c = coeffs.get(k)
        if c and j < len(tf.components):
            rhs = rhs + wedge(tf[i], tf[j]).scale(c)
    return exterior_derivative(tf[k]) - rhs


def normalize_scalar(form: ExteriorForm, reference: ExteriorForm) -> Fraction | None:
    """The rational constant r with form = r * reference, or None."""
    r = form.ratio_to(reference)
    return None if r is None else rational_value(r)
