"""
Exact sparse linear algebra over the rationals.

Vectors are plain ``dict[int, Fraction]`` maps with no stored zeros.  All
elimination is Gauss-Jordan to reduced row echelon form, which is unique, so
every basis returned here (kernel, image, cohomology representatives) is
canonical and independent of pivoting order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

Vector = dict


class SparseMatrix:
    """A ``rows x cols`` matrix with exact rational entries keyed by ``(row, col)``."""

    __slots__ = ("rows", "cols", "_rows")

    def __init__(self, rows: int, cols: int, entries: Mapping[tuple[int, int], object] | None = None):
        if rows < 0 or cols < 0:
            raise ValueError("matrix shape must be nonnegative")
        self.rows = rows
        self.cols = cols
        self._rows: dict[int, dict[int, Fraction]] = {}
        if entries:
            for (i, j), v in entries.items():
                self.add(i, j, v)

    @classmethod
    def from_dense(cls, data: Iterable[Iterable[object]], cols: int | None = None) -> "SparseMatrix":
        data = [list(r) for r in data]
        ncols = cols if cols is not None else (len(data[0]) if data else 0)
        m = cls(len(data), ncols)
        for i, r in enumerate(data):
            if len(r) != ncols:
                raise ValueError("ragged dense matrix")
            for j, v in enumerate(r):
                m.add(i, j, v)
        return m

    @classmethod
    def from_columns(cls, rows: int, columns: list[Vector]) -> "SparseMatrix":
        m = cls(rows, len(columns))
        for j, col in enumerate(columns):
            for i, v in col.items():
                m.add(i, j, v)
        return m

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        return cls(n, n, {(i, i): 1 for i in range(n)})

    def add(self, i: int, j: int, v) -> None:
        """Accumulate ``v`` into entry ``(i, j)``."""
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(f"entry ({i}, {j}) outside {self.rows}x{self.cols}")
        v = Fraction(v)
        if not v:
            return
        row = self._rows.setdefault(i, {})
        s = row.get(j, 0) + v
        if s:
            row[j] = s
        else:
            del row[j]
            if not row:
                del self._rows[i]

    def __getitem__(self, ij: tuple[int, int]) -> Fraction:
        i, j = ij
        return self._rows.get(i, {}).get(j, Fraction(0))

    @property
    def entries(self) -> dict[tuple[int, int], Fraction]:
        return {(i, j): v for i, row in self._rows.items() for j, v in row.items()}

    def row(self, i: int) -> Vector:
        return dict(self._rows.get(i, {}))

    def nnz(self) -> int:
        return sum(len(r) for r in self._rows.values())

    def is_zero(self) -> bool:
        return not self._rows

    def to_dense(self) -> list[list[Fraction]]:
        out = [[Fraction(0)] * self.cols for _ in range(self.rows)]
        for i, row in self._rows.items():
            for j, v in row.items():
                out[i][j] = v
        return out

    def transpose(self) -> "SparseMatrix":
        t = SparseMatrix(self.cols, self.rows)
        for i, row in self._rows.items():
            for j, v in row.items():
                t._rows.setdefault(j, {})[i] = v
        return t

    def apply(self, v: Vector) -> Vector:
        out: dict[int, Fraction] = {}
        for i, row in self._rows.items():
            s = Fraction(0)
            for j, a in row.items():
                x = v.get(j)
                if x:
                    s += a * x
            if s:
                out[i] = s
        return out

    def __matmul__(self, other: "SparseMatrix") -> "SparseMatrix":
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.rows}x{self.cols} @ {other.rows}x{other.cols}")
        out = SparseMatrix(self.rows, other.cols)
        for i, row in self._rows.items():
            acc: dict[int, Fraction] = {}
            for k, a in row.items():
                for j, b in other._rows.get(k, {}).items():
                    acc[j] = acc.get(j, 0) + a * b
            acc = {j: v for j, v in acc.items() if v}
            if acc:
                out._rows[i] = acc
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (self.rows, self.cols) == (other.rows, other.cols) and self._rows == other._rows

    def __repr__(self) -> str:
        return f"SparseMatrix({self.rows}x{self.cols}, nnz={self.nnz()})"


def _sub_scaled(row: Vector, c: Fraction, other: Vector) -> None:
    # row -= c * other, in place
    for j, v in other.items():
        s = row.get(j, 0) - c * v
        if s:
            row[j] = s
        else:
            row.pop(j, None)


class Echelon:
    """
    Incrementally maintained reduced row echelon basis of a subspace.

    ``pivots`` maps pivot column -> normalized row (pivot entry 1, zero in
    every other pivot column).
    """

    def __init__(self, vectors: Iterable[Vector] = ()):
        self.pivots: dict[int, Vector] = {}
        # sparse rows first: a cheap Markowitz-style fill-in heuristic
        for v in sorted((dict(v) for v in vectors), key=len):
            self.add(v)

    def __len__(self) -> int:
        return len(self.pivots)

    def reduce(self, v: Vector) -> Vector:
        """Remainder of ``v`` modulo the span (zero in every pivot column)."""
        r = {j: Fraction(x) for j, x in v.items() if x}
        for p in [p for p in r if p in self.pivots]:
            c = r.get(p)
            if c:
                _sub_scaled(r, c, self.pivots[p])
        return r

    def add(self, v: Vector) -> bool:
        """Insert ``v``; return False if it was already in the span."""
        r = self.reduce(v)
        if not r:
            return False
        p = min(r)
        c = r[p]
        r = {j: x / c for j, x in r.items()}
        for q, row in self.pivots.items():
            a = row.get(p)
            if a:
                _sub_scaled(row, a, r)
        self.pivots[p] = r
        return True

    def contains(self, v: Vector) -> bool:
        return not self.reduce(v)

    def basis(self) -> list[Vector]:
        return [dict(self.pivots[p]) for p in sorted(self.pivots)]


@dataclass
class RankKernelImage:
    rank: int
    kernel: list[Vector]
    image: list[Vector]
    pivots: list[int]
    rref: list[Vector] = field(repr=False)


def rref(m: SparseMatrix) -> Echelon:
    return Echelon(m.row(i) for i in range(m.rows))


def rank(m: SparseMatrix) -> int:
    return len(rref(m))


def kernel_from_echelon(e: Echelon, ncols: int) -> list[Vector]:
    basis = []
    for f in range(ncols):
        if f in e.pivots:
            continue
        v = {f: Fraction(1)}
        for p, row in e.pivots.items():
            a = row.get(f)
            if a:
                v[p] = -a
        basis.append(v)
    return basis


def rank_kernel_image(m: SparseMatrix) -> RankKernelImage:
    """
    Rank, canonical kernel basis (one vector per free column, from the RREF)
    and canonical image basis (RREF of the column space) of ``m``.
    """
    e = rref(m)
    kernel = kernel_from_echelon(e, m.cols)
    image = rref(m.transpose()).basis()
    return RankKernelImage(
        rank=len(e),
        kernel=kernel,
        image=image,
        pivots=sorted(e.pivots),
        rref=e.basis(),
    )


def solve(m: SparseMatrix, b: Vector) -> Vector | None:
    """A particular solution of ``m x = b`` (free variables set to zero), or None."""
    aug = SparseMatrix(m.rows, m.cols + 1, m.entries)
    for i, v in b.items():
        aug.add(i, m.cols, v)
    e = rref(aug)
    if m.cols in e.pivots:
        return None
    x = {}
    for p, row in e.pivots.items():
        v = row.get(m.cols)
        if v:
            x[p] = v
    return x


def cohomology_basis(d_in: SparseMatrix | None, d_out: SparseMatrix | None, dim: int) -> tuple[list[Vector], Echelon]:
    """
    Representatives for ker(d_out) / im(d_in) on a ``dim``-dimensional space.

    Cocycles are the RREF kernel basis of ``d_out``; each is reduced modulo the
    echelonized image of ``d_in`` and kept if it enlarges the running span.
    Returns the representatives and the echelon of the image.
    """
    if d_in is not None and d_in.rows != dim:
        raise ValueError("incoming differential has wrong target dimension")
    if d_out is not None and d_out.cols != dim:
        raise ValueError("outgoing differential has wrong source dimension")
    boundaries = rref(d_in.transpose()) if d_in is not None else Echelon()
    if d_out is None:
        cocycles = [{i: Fraction(1)} for i in range(dim)]
    else:
        cocycles = kernel_from_echelon(rref(d_out), dim)
    span = Echelon(boundaries.basis())
    reps = []
    for z in cocycles:
        r = boundaries.reduce(z)
        if r and span.add(r):
            reps.append(r)
    return reps, boundaries


def coordinates_mod(reps: list[Vector], boundaries: Echelon, v: Vector, dim: int) -> list[Fraction] | None:
    """Coordinates of the class of ``v`` in the basis ``reps``, or None if ``v`` is not in their span plus boundaries."""
    cols = list(reps) + boundaries.basis()
    x = solve(SparseMatrix.from_columns(dim, cols), v)
    if x is None:
        return None
    return [x.get(i, Fraction(0)) for i in range(len(reps))]
