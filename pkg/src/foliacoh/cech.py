"""
Cech-de Rham double complexes over finite chart categories.

A chart is a finite simplicial complex, a morphism a simplicial vertex map,
and the coefficient in bidegree (p, q) is the space of simplicial q-cochains
on the source of each length-p string of composable morphisms.  Strings
include identities (no normalization).  Horizontal differential:

    (delta w)(h1..h_{p+1}) = h1^* w(h2..h_{p+1})
                             + sum_{i=1}^{p} (-1)^i w(h1, .., h_{i+1} h_i, .., h_{p+1})
                             + (-1)^{p+1} w(h1..h_p)

vertical differential (-1)^p d, total differential D = delta + (-1)^p d.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Hashable, Iterable, Mapping, NamedTuple, Sequence

from .algebra.linalg import SparseMatrix, Vector, cohomology_basis, coordinates_mod, Echelon
from .algebra.rational import as_rational, format_rational

DEFAULT_MAX_STRINGS = 200_000


class ModelValidationError(ValueError):
    kind = "invalid model"


class MissingIdentityError(ModelValidationError):
    kind = "missing identity"


class OpenCompositionError(ModelValidationError):
    kind = "open composition"


class NonSimplicialMapError(ModelValidationError):
    kind = "non-simplicial map"


class CompositionMismatchError(ModelValidationError):
    kind = "composition mismatch"


class NonAssociativeError(ModelValidationError):
    kind = "non-associative composition"


class GuardError(RuntimeError):
    """A configured size guard was exceeded."""


class IncompatibleFamilyError(ValueError):
    def __init__(self, morphism: str, message: str):
        super().__init__(message)
        self.morphism = morphism


# --- simplicial complexes -----------------------------------------------------


class SimplicialComplex:
    """
    Finite abstract simplicial complex given by a vertex list and maximal simplices.

    The vertex list fixes the vertex order; q-simplices are increasing index
    tuples, enumerated in lexicographic order.
    """

    def __init__(self, vertices: Sequence[Hashable], maximal_simplices: Iterable[Iterable[Hashable]] = ()):
        self.vertices = tuple(vertices)
        if not self.vertices:
            raise ModelValidationError("a complex needs at least one vertex")
        if len(set(self.vertices)) != len(self.vertices):
            raise ModelValidationError(f"duplicate vertices in {self.vertices}")
        self.index = {v: i for i, v in enumerate(self.vertices)}
        faces: set[tuple[int, ...]] = {(i,) for i in range(len(self.vertices))}
        maxes = []
        for s in maximal_simplices:
            s = list(s)
            try:
                idx = tuple(sorted({self.index[v] for v in s}))
            except KeyError as e:
                raise ModelValidationError(f"simplex {s} uses unknown vertex {e.args[0]!r}") from None
            if len(idx) != len(s):
                raise ModelValidationError(f"simplex {s} repeats a vertex")
            maxes.append(idx)
            for k in range(1, len(idx) + 1):
                faces.update(combinations(idx, k))
        self.maximal = tuple(sorted(set(maxes)))
        self._faces = faces

    @cached_property
    def dimension(self) -> int:
        return max(len(f) for f in self._faces) - 1

    def simplices(self, q: int) -> list[tuple[int, ...]]:
        return self._by_dim.get(q, [])

    @cached_property
    def _by_dim(self) -> dict[int, list[tuple[int, ...]]]:
        out: dict[int, list] = {}
        for f in self._faces:
            out.setdefault(len(f) - 1, []).append(f)
        for v in out.values():
            v.sort()
        return out

    @cached_property
    def _simplex_index(self) -> dict[tuple[int, ...], int]:
        return {s: i for fs in self._by_dim.values() for i, s in enumerate(fs)}

    def simplex_index(self, s: tuple[int, ...]) -> int:
        return self._simplex_index[s]

    def has_simplex(self, s: Iterable[int]) -> bool:
        return tuple(sorted(s)) in self._faces

    def dim_cochains(self, q: int) -> int:
        return len(self.simplices(q))

    def full_subcomplex(self, vertices: Iterable[Hashable]) -> "SimplicialComplex":
        keep = [v for v in self.vertices if v in set(vertices)]
        ks = {self.index[v] for v in keep}
        maxes = [[self.vertices[i] for i in f] for f in self._faces if set(f) <= ks]
        return SimplicialComplex(keep, maxes)

    def coboundary_matrix(self, q: int) -> SparseMatrix:
        """(d w)([v0..v_{q+1}]) = sum_i (-1)^i w([.. v_i omitted ..])."""
        return self._coboundary(q)

    def _coboundary(self, q: int) -> SparseMatrix:
        cache = self.__dict__.setdefault("_cob_cache", {})
        if q not in cache:
            src = self.simplices(q)
            tgt = self.simplices(q + 1)
            m = SparseMatrix(len(tgt), len(src))
            for r, s in enumerate(tgt):
                for i in range(len(s)):
                    face = s[:i] + s[i + 1:]
                    m.add(r, self.simplex_index(face), -1 if i % 2 else 1)
            cache[q] = m
        return cache[q]

    def __repr__(self) -> str:
        return f"SimplicialComplex({list(self.vertices)}, {[[self.vertices[i] for i in s] for s in self.maximal]})"


def simplicial_pullback_table(vertex_map: Sequence[int], src: SimplicialComplex, tgt: SimplicialComplex, q: int):
    """
    For each q-simplex of ``src``: (index of image simplex in ``tgt``, sign) or
    None when the image is degenerate.
    """
    out = []
    for s in src.simplices(q):
        img = [vertex_map[i] for i in s]
        if len(set(img)) < len(img):
            out.append(None)
            continue
        order = sorted(range(len(img)), key=lambda k: img[k])
        sign = _perm_sign(order)
        out.append((tgt.simplex_index(tuple(sorted(img))), sign))
    return out


def _perm_sign(perm: Sequence[int]) -> int:
    sign, seen = 1, [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


# --- categories ---------------------------------------------------------------


@dataclass(frozen=True)
class ChartObject:
    id: str
    complex: SimplicialComplex


@dataclass(frozen=True)
class ChartMorphism:
    id: str
    source: str
    target: str
    vertex_map: Mapping[Hashable, Hashable]


@dataclass
class Diagnostic:
    kind: str
    message: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.message}"


class ChainString(NamedTuple):
    """A string U_0 -> ... -> U_p of composable morphisms (``arrows`` empty for p = 0)."""

    source: str
    arrows: tuple[str, ...]

    @property
    def length(self) -> int:
        return len(self.arrows)


class ChartCategory:
    """
    A finite category of charts.  ``composition[(f, g)]`` is the id of
    ``g o f`` (first f, then g).  Compositions with identities are implicit.
    """

    def __init__(self, objects: Sequence[ChartObject], morphisms: Sequence[ChartMorphism],
                 composition: Mapping[tuple[str, str], str], identities: Mapping[str, str] | None = None):
        self.objects: dict[str, ChartObject] = {}
        for o in objects:
            if o.id in self.objects:
                raise ModelValidationError(f"duplicate object id {o.id!r}")
            self.objects[o.id] = o
        self.morphisms: dict[str, ChartMorphism] = {}
        for m in morphisms:
            if m.id in self.morphisms:
                raise ModelValidationError(f"duplicate morphism id {m.id!r}")
            for end in (m.source, m.target):
                if end not in self.objects:
                    raise ModelValidationError(f"morphism {m.id!r} refers to unknown object {end!r}")
            self.morphisms[m.id] = m
        self.composition = dict(composition)
        self.identities = dict(identities) if identities is not None else self._find_identities()
        self._morph_order = {m: i for i, m in enumerate(self.morphisms)}
        self._obj_order = {o: i for i, o in enumerate(self.objects)}

    def _find_identities(self) -> dict[str, str]:
        ids = {}
        for oid, obj in self.objects.items():
            cands = []
            for m in self.morphisms.values():
                if m.source != oid or m.target != oid:
                    continue
                if any(m.vertex_map.get(v, object()) != v for v in obj.complex.vertices):
                    continue
                neutral = all(
                    self.composition.get((m.id, g), g) == g
                    for g in self.morphisms if self.morphisms[g].source == oid
                ) and all(
                    self.composition.get((f, m.id), f) == f
                    for f in self.morphisms if self.morphisms[f].target == oid
                )
                if neutral:
                    cands.append(m.id)
            if len(cands) == 1:
                ids[oid] = cands[0]
            elif len(cands) > 1:
                # several neutral-looking endomorphisms: the table cannot tell them apart
                ids[oid] = None
        return ids

    # composition

    def compose(self, first: str, then: str) -> str:
        f, g = self.morphisms[first], self.morphisms[then]
        if f.target != g.source:
            raise ValueError(f"{first} and {then} are not composable")
        if self.identities.get(f.source) == first:
            return then
        if self.identities.get(g.target) == then:
            return first
        key = (first, then)
        if key not in self.composition:
            raise OpenCompositionError(f"composite of {first!r} then {then!r} is missing from the table")
        return self.composition[key]

    def identity(self, obj: str) -> str:
        i = self.identities.get(obj)
        if i is None:
            raise MissingIdentityError(f"object {obj!r} has no identity morphism")
        return i

    @cached_property
    def _vertex_maps(self) -> dict[str, list[int]]:
        out = {}
        for m in self.morphisms.values():
            src = self.objects[m.source].complex
            tgt = self.objects[m.target].complex
            out[m.id] = [tgt.index[m.vertex_map[v]] for v in src.vertices]
        return out

    def vertex_map(self, morphism: str) -> list[int]:
        return self._vertex_maps[morphism]

    def pullback_table(self, morphism: str, q: int):
        cache = self.__dict__.setdefault("_pb_cache", {})
        key = (morphism, q)
        if key not in cache:
            m = self.morphisms[morphism]
            cache[key] = simplicial_pullback_table(
                self.vertex_map(morphism), self.objects[m.source].complex, self.objects[m.target].complex, q
            )
        return cache[key]

    def pullback(self, morphism: str, q: int, values: Sequence[Fraction]) -> list[Fraction]:
        """h^* of a q-cochain on the target of h (``values`` aligned with target simplices)."""
        out = []
        for entry in self.pullback_table(morphism, q):
            if entry is None:
                out.append(Fraction(0))
            else:
                j, s = entry
                out.append(values[j] if s > 0 else -values[j])
        return out

    # strings

    @cached_property
    def _outgoing(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {o: [] for o in self.objects}
        for m in self.morphisms.values():
            out[m.source].append(m.id)
        return out

    def target_of(self, s: ChainString) -> str:
        return self.morphisms[s.arrows[-1]].target if s.arrows else s.source

    def strings(self, p: int) -> list[ChainString]:
        cache = self.__dict__.setdefault("_str_cache", {})
        if p not in cache:
            if p < 0:
                raise ValueError("string length must be nonnegative")
            if p == 0:
                cache[p] = [ChainString(o, ()) for o in self.objects]
            else:
                out = []
                for s in self.strings(p - 1):
                    end = self.target_of(s)
                    for m in self._outgoing[end]:
                        out.append(ChainString(s.source, s.arrows + (m,)))
                if p == 1:
                    out.sort(key=lambda s: self._morph_order[s.arrows[0]])
                else:
                    out.sort(key=lambda s: tuple(self._morph_order[a] for a in s.arrows))
                cache[p] = out
        return cache[p]

    def count_strings(self, p: int) -> int:
        """Number of length-p strings, without materializing them."""
        counts = {o: 1 for o in self.objects}  # strings of length 0 ending at o
        for _ in range(p):
            nxt = {o: 0 for o in self.objects}
            for m in self.morphisms.values():
                nxt[m.target] += counts[m.source]
            counts = nxt
        return sum(counts.values())

    def source_complex(self, s: ChainString) -> SimplicialComplex:
        return self.objects[s.source].complex

    def string_from_arrows(self, arrows: Sequence[str]) -> ChainString:
        arrows = tuple(arrows)
        if not arrows:
            raise ValueError("use ChainString(obj, ()) for length-0 strings")
        for a, b in zip(arrows, arrows[1:]):
            if self.morphisms[a].target != self.morphisms[b].source:
                raise ValueError(f"{a} and {b} are not composable")
        return ChainString(self.morphisms[arrows[0]].source, arrows)

    # validation

    def validate(self) -> list[Diagnostic]:
        return validate_category(self)


def validate_category(cat: ChartCategory) -> list[Diagnostic]:
    """Check identities, simplicial maps, closure, consistency and associativity; [] means ok."""
    diags: list[Diagnostic] = []
    for oid in cat.objects:
        if cat.identities.get(oid) is None:
            diags.append(Diagnostic(MissingIdentityError.kind, f"object {oid!r} has no identity morphism"))
    for m in cat.morphisms.values():
        src = cat.objects[m.source].complex
        tgt = cat.objects[m.target].complex
        bad = [v for v in src.vertices if v not in m.vertex_map or m.vertex_map[v] not in tgt.index]
        if bad:
            diags.append(Diagnostic(NonSimplicialMapError.kind, f"morphism {m.id!r} does not map vertex {bad[0]!r} into {m.target!r}"))
            continue
        for s in src.maximal:
            img = {tgt.index[m.vertex_map[src.vertices[i]]] for i in s}
            if not tgt.has_simplex(img):
                names = [src.vertices[i] for i in s]
                diags.append(Diagnostic(NonSimplicialMapError.kind, f"morphism {m.id!r} sends simplex {names} to a non-simplex"))
                break
    if diags:
        return diags
    for (f, g), h in cat.composition.items():
        for x in (f, g, h):
            if x not in cat.morphisms:
                diags.append(Diagnostic(ModelValidationError.kind, f"composition table refers to unknown morphism {x!r}"))
                return diags
        F, G, H = cat.morphisms[f], cat.morphisms[g], cat.morphisms[h]
        if F.target != G.source or H.source != F.source or H.target != G.target:
            diags.append(Diagnostic(CompositionMismatchError.kind, f"{g!r} o {f!r} = {h!r} has wrong source/target"))
            continue
        if (cat.identities.get(F.source) == f and h != g) or (cat.identities.get(G.target) == g and h != f):
            diags.append(Diagnostic(CompositionMismatchError.kind, f"table entry {g!r} o {f!r} = {h!r} contradicts an identity"))
            continue
        vf, vg, vh = cat.vertex_map(f), cat.vertex_map(g), cat.vertex_map(h)
        if [vg[i] for i in vf] != vh:
            diags.append(Diagnostic(CompositionMismatchError.kind, f"vertex map of {h!r} differs from {g!r} o {f!r}"))
    if diags:
        return diags
    for f in cat.morphisms.values():
        for g in cat._outgoing[f.target]:
            try:
                cat.compose(f.id, g)
            except OpenCompositionError:
                diags.append(Diagnostic(OpenCompositionError.kind, f"composite of {f.id!r} then {g!r} is missing"))
    if diags:
        return diags
    for f in cat.morphisms.values():
        for g in cat._outgoing[f.target]:
            gf = cat.compose(f.id, g)
            for h in cat._outgoing[cat.morphisms[g].target]:
                if cat.compose(gf, h) != cat.compose(f.id, cat.compose(g, h)):
                    diags.append(Diagnostic(NonAssociativeError.kind, f"({h!r} o {g!r}) o {f.id!r} differs from {h!r} o ({g!r} o {f.id!r})"))
                    return diags
    return diags


_ERRORS = {
    e.kind: e
    for e in (MissingIdentityError, OpenCompositionError, NonSimplicialMapError, CompositionMismatchError, NonAssociativeError)
}


def require_valid(cat: ChartCategory) -> ChartCategory:
    diags = validate_category(cat)
    if diags:
        raise _ERRORS.get(diags[0].kind, ModelValidationError)(str(diags[0]))
    return cat


def category_from_dict(data: Mapping) -> ChartCategory:
    """
    Load (and validate) a category from the JSON model format.

    Vertex ids are normalized to strings (JSON object keys are strings).
    ``identities`` ({object: morphism}) is optional; without it each object's
    identity is the unique endomorphism that fixes every vertex and is
    neutral in the composition table.
    """
    try:
        objects = [
            ChartObject(
                str(o["id"]),
                SimplicialComplex([str(v) for v in o["vertices"]],
                                  [[str(v) for v in s] for s in o.get("maximal_simplices", [])]),
            )
            for o in data["objects"]
        ]
        morphisms = [
            ChartMorphism(str(m["id"]), str(m["source"]), str(m["target"]), _vertex_map(m["vertex_map"]))
            for m in data["morphisms"]
        ]
        comp = {(str(c["first"]), str(c["then"])): str(c["equals"]) for c in data.get("composition", [])}
        ids = data.get("identities")
        ids = {str(k): str(v) for k, v in ids.items()} if ids is not None else None
    except (KeyError, TypeError, AttributeError) as e:
        raise ModelValidationError(f"malformed model: {e!r}") from None
    if ids is not None:
        for oid, mid in ids.items():
            if mid not in {m.id for m in morphisms}:
                raise MissingIdentityError(f"declared identity {mid!r} of {oid!r} is not a morphism")
    return require_valid(ChartCategory(objects, morphisms, comp, ids))


def _vertex_map(vm) -> dict[str, str]:
    pairs = vm.items() if isinstance(vm, Mapping) else vm
    return {str(a): str(b) for a, b in pairs}


def category_to_dict(cat: ChartCategory) -> dict:
    return {
        "objects": [
            {
                "id": o.id,
                "vertices": list(o.complex.vertices),
                "maximal_simplices": [[o.complex.vertices[i] for i in s] for s in o.complex.maximal],
            }
            for o in cat.objects.values()
        ],
        "morphisms": [
            {"id": m.id, "source": m.source, "target": m.target, "vertex_map": dict(m.vertex_map)}
            for m in cat.morphisms.values()
        ],
        "composition": [{"first": f, "then": g, "equals": h} for (f, g), h in cat.composition.items()],
    }


# --- bigraded cochains --------------------------------------------------------


@dataclass
class BigradedCochain:
    """An element of C^{p,q}: string -> q-cochain on its source (missing strings read as zero)."""

    p: int
    q: int
    values: dict[ChainString, tuple[Fraction, ...]] = field(default_factory=dict)

    def get(self, cat: ChartCategory, s: ChainString) -> tuple[Fraction, ...]:
        v = self.values.get(s)
        if v is None:
            return (Fraction(0),) * cat.source_complex(s).dim_cochains(self.q)
        return v

    def is_zero(self) -> bool:
        return all(x == 0 for v in self.values.values() for x in v)

    def __sub__(self, other: "BigradedCochain") -> "BigradedCochain":
        return _combine(self, other, -1)

    def __add__(self, other: "BigradedCochain") -> "BigradedCochain":
        return _combine(self, other, 1)

    def scale(self, a) -> "BigradedCochain":
        a = as_rational(a)
        return BigradedCochain(self.p, self.q, {s: tuple(a * x for x in v) for s, v in self.values.items()})

    def nonzero(self) -> dict[ChainString, tuple[Fraction, ...]]:
        return {s: v for s, v in self.values.items() if any(v)}

    def to_json(self, cat: ChartCategory | None = None) -> dict:
        out = []
        for s in sorted(self.nonzero(), key=lambda s: (s.source, s.arrows)):
            out.append({"source": s.source, "arrows": list(s.arrows), "values": [format_rational(x) for x in self.values[s]]})
        return {"p": self.p, "q": self.q, "values": out}


def _combine(a: BigradedCochain, b: BigradedCochain, sign: int) -> BigradedCochain:
    if (a.p, a.q) != (b.p, b.q):
        raise ValueError(f"bidegree mismatch ({a.p},{a.q}) vs ({b.p},{b.q})")
    out = dict(a.values)
    for s, v in b.values.items():
        if s in out:
            out[s] = tuple(x + sign * y for x, y in zip(out[s], v))
        else:
            out[s] = tuple(sign * y for y in v)
    return BigradedCochain(a.p, a.q, out)


def zero_cochain(p: int, q: int) -> BigradedCochain:
    return BigradedCochain(p, q, {})


def delta_terms(cat: ChartCategory, s: ChainString):
    """
    The terms of (delta w)(s) for a string s of length p+1, as
    (sign, substring, morphism to pull back along or None).
    """
    hs = s.arrows
    k = len(hs)
    if k == 0:
        raise ValueError("delta lands in strings of positive length")
    if k == 1:
        tail = ChainString(cat.morphisms[hs[0]].target, ())
    else:
        tail = ChainString(cat.morphisms[hs[1]].source, hs[1:])
    yield 1, tail, hs[0]
    for i in range(1, k):
        merged = hs[: i - 1] + (cat.compose(hs[i - 1], hs[i]),) + hs[i + 1:]
        yield (-1) ** i, ChainString(s.source, merged), None
    yield (-1) ** k, ChainString(s.source, hs[:-1]), None


def horizontal_delta(cat: ChartCategory, c: BigradedCochain) -> BigradedCochain:
    out = {}
    for s in cat.strings(c.p + 1):
        acc = [Fraction(0)] * cat.source_complex(s).dim_cochains(c.q)
        for sign, sub, h in delta_terms(cat, s):
            v = c.values.get(sub)
            if v is None:
                continue
            if h is not None:
                v = cat.pullback(h, c.q, v)
            for i, x in enumerate(v):
                if x:
                    acc[i] += sign * x
        if any(acc):
            out[s] = tuple(acc)
    return BigradedCochain(c.p + 1, c.q, out)


def simplicial_d(cat: ChartCategory, c: BigradedCochain) -> BigradedCochain:
    """Plain simplicial coboundary on every string's value (no sign)."""
    out = {}
    for s, v in c.values.items():
        m = cat.source_complex(s).coboundary_matrix(c.q)
        w = m.apply({i: x for i, x in enumerate(v) if x})
        out[s] = tuple(w.get(i, Fraction(0)) for i in range(m.rows))
    return BigradedCochain(c.p, c.q + 1, out)


def vertical_d(cat: ChartCategory, c: BigradedCochain) -> BigradedCochain:
    """(-1)^p d."""
    dc = simplicial_d(cat, c)
    return dc if c.p % 2 == 0 else dc.scale(-1)


def total_D(cat: ChartCategory, parts: Mapping[int, BigradedCochain]) -> dict[int, BigradedCochain]:
    """D on a total-degree element given as {p: (p, q)-component}."""
    out: dict[int, BigradedCochain] = {}
    for p, c in parts.items():
        for piece in (horizontal_delta(cat, c), vertical_d(cat, c)):
            out[piece.p] = out[piece.p] + piece if piece.p in out else piece
    return out


# --- total complex linear algebra --------------------------------------------


def max_strings_guard() -> int:
    return int(os.environ.get("FOLIACOH_MAX_STRINGS", DEFAULT_MAX_STRINGS))


class TotalComplex:
    """Coordinates on C^n = sum_{p+q=n} C^{p,q} and the matrices of D."""

    def __init__(self, cat: ChartCategory, max_strings: int | None = None):
        self.cat = cat
        self.max_strings = max_strings if max_strings is not None else max_strings_guard()
        self.qmax = max(o.complex.dimension for o in cat.objects.values())
        self._layouts: dict[int, list[tuple[int, int, ChainString, int]]] = {}

    def _check_guard(self, p: int) -> None:
        count = self.cat.count_strings(p)
        if count > self.max_strings:
            raise GuardError(f"{count} strings of length {p} exceed the cap {self.max_strings} (FOLIACOH_MAX_STRINGS)")

    def layout(self, n: int) -> list[tuple[int, int, ChainString, int]]:
        """Blocks (p, q, string, offset) of the degree-n space, p ascending."""
        if n not in self._layouts:
            blocks, off = [], 0
            for p in range(max(0, n - self.qmax), n + 1):
                q = n - p
                self._check_guard(p)
                for s in self.cat.strings(p):
                    dim = self.cat.source_complex(s).dim_cochains(q)
                    if dim:
                        blocks.append((p, q, s, off))
                        off += dim
            self._layouts[n] = blocks
            self.__dict__.setdefault("_dims", {})[n] = off
        return self._layouts[n]

    def dim(self, n: int) -> int:
        if n < 0:
            return 0
        self.layout(n)
        return self._dims[n]

    def _offsets(self, n: int) -> dict[tuple[int, ChainString], int]:
        cache = self.__dict__.setdefault("_off_cache", {})
        if n not in cache:
            cache[n] = {(p, s): off for p, q, s, off in self.layout(n)}
        return cache[n]

    def differential(self, n: int) -> SparseMatrix:
        """Matrix of D: C^n -> C^{n+1}."""
        cache = self.__dict__.setdefault("_D_cache", {})
        if n in cache:
            return cache[n]
        src_off = self._offsets(n)
        tgt_layout = self.layout(n + 1)
        m = SparseMatrix(self.dim(n + 1), self.dim(n))
        cat = self.cat
        for p, q, s, toff in tgt_layout:
            # horizontal part: from (p-1, q)
            if p >= 1:
                for sign, sub, h in delta_terms(cat, s):
                    soff = src_off.get((p - 1, sub))
                    if soff is None:
                        continue
                    if h is None:
                        for i in range(cat.source_complex(s).dim_cochains(q)):
                            m.add(toff + i, soff + i, sign)
                    else:
                        for i, entry in enumerate(cat.pullback_table(h, q)):
                            if entry is not None:
                                j, sg = entry
                                m.add(toff + i, soff + j, sign * sg)
            # vertical part: from (p, q-1)
            if q >= 1:
                soff = src_off.get((p, s))
                if soff is not None:
                    cob = cat.source_complex(s).coboundary_matrix(q - 1)
                    vs = -1 if p % 2 else 1
                    for (i, j), v in cob.entries.items():
                        m.add(toff + i, soff + j, vs * v)
        cache[n] = m
        return m

    def to_vector(self, n: int, parts: Mapping[int, BigradedCochain]) -> Vector:
        offs = self._offsets(n)
        v = {}
        for p, c in parts.items():
            if c.p + c.q != n:
                raise ValueError("component of wrong total degree")
            for s, vals in c.values.items():
                off = offs.get((p, s))
                if off is None:
                    if any(vals):
                        raise ValueError(f"string {s} not in the degree-{n} layout")
                    continue
                for i, x in enumerate(vals):
                    if x:
                        v[off + i] = Fraction(x)
        return v

    def from_vector(self, n: int, v: Vector) -> dict[int, BigradedCochain]:
        parts: dict[int, BigradedCochain] = {}
        for p, q, s, off in self.layout(n):
            dim = self.cat.source_complex(s).dim_cochains(q)
            vals = tuple(v.get(off + i, Fraction(0)) for i in range(dim))
            c = parts.setdefault(p, BigradedCochain(p, q, {}))
            if any(vals):
                c.values[s] = vals
        return parts


@dataclass
class TotalCohomologyResult:
    betti: list[int]
    representatives: list[list[dict[int, BigradedCochain]]]
    complex: TotalComplex = field(repr=False)
    _boundaries: list[Echelon] = field(repr=False, default_factory=list)
    _rep_vectors: list[list[Vector]] = field(repr=False, default_factory=list)

    def class_coordinates(self, n: int, parts: Mapping[int, BigradedCochain]) -> list[Fraction] | None:
        """Coordinates of the class of a total cocycle in the representative basis (None if not a cocycle)."""
        v = self.complex.to_vector(n, parts)
        if self.complex.differential(n).apply(v):
            return None
        return coordinates_mod(self._rep_vectors[n], self._boundaries[n], v, self.complex.dim(n))

    def to_json(self) -> dict:
        return {
            "betti": list(self.betti),
            "representatives": [
                {"degree": n, "components": [c.to_json() for p, c in sorted(rep.items()) if not c.is_zero()]}
                for n, reps in enumerate(self.representatives)
                for rep in reps
            ],
        }


def total_cohomology(cat: ChartCategory, max_total_degree: int, max_strings: int | None = None) -> TotalCohomologyResult:
    """Cohomology of Tot(C, delta + (-1)^p d) in degrees 0..max_total_degree."""
    if max_total_degree < 0:
        raise ValueError("max_total_degree must be nonnegative")
    tc = TotalComplex(cat, max_strings)
    betti, reps, bounds, repv = [], [], [], []
    for n in range(max_total_degree + 1):
        d_in = tc.differential(n - 1) if n > 0 else None
        d_out = tc.differential(n)
        vecs, boundaries = cohomology_basis(d_in, d_out, tc.dim(n))
        betti.append(len(vecs))
        reps.append([tc.from_vector(n, r) for r in vecs])
        bounds.append(boundaries)
        repv.append(vecs)
    return TotalCohomologyResult(betti, reps, tc, bounds, repv)


def j_map(cat: ChartCategory, family: Mapping[str, Sequence], q: int) -> BigradedCochain:
    """
    The (0, q) cochain U_0 -> w_{U_0} of a family of q-cochains, one per
    object, after checking h^* w_target = w_source for every morphism h.
    """
    fam = {}
    for oid, obj in cat.objects.items():
        vals = family.get(oid)
        dim = obj.complex.dim_cochains(q)
        if vals is None:
            vals = [0] * dim
        if len(vals) != dim:
            raise ValueError(f"cochain on {oid!r} has {len(vals)} entries, expected {dim}")
        fam[oid] = tuple(as_rational(x) for x in vals)
    for m in cat.morphisms.values():
        pulled = cat.pullback(m.id, q, fam[m.target])
        if tuple(pulled) != fam[m.source]:
            raise IncompatibleFamilyError(m.id, f"family is not compatible along morphism {m.id!r}")
    return BigradedCochain(0, q, {ChainString(o, ()): v for o, v in fam.items() if any(v)})


def random_cochain(cat: ChartCategory, p: int, q: int, rng, bound: int = 5) -> BigradedCochain:
    """Random small-rational cochain on every length-p string (numerators in [-bound, bound], denominators 1..bound)."""
    out = {}
    for s in cat.strings(p):
        dim = cat.source_complex(s).dim_cochains(q)
        if dim:
            out[s] = tuple(Fraction(rng.randint(-bound, bound), rng.randint(1, bound)) for _ in range(dim))
    return BigradedCochain(p, q, out)


def simplicial_cohomology(cx: SimplicialComplex, max_degree: int) -> list[int]:
    """Betti numbers of a single complex (rank-nullity over the simplicial coboundaries)."""
    out = []
    for q in range(max_degree + 1):
        dim = cx.dim_cochains(q)
        d_out = cx.coboundary_matrix(q)
        d_in = cx.coboundary_matrix(q - 1) if q > 0 else None
        reps, _ = cohomology_basis(d_in, d_out, dim)
        out.append(len(reps))
    return out
