"""Exact rational linear algebra.

Everything here works on Python integers and :class:`fractions.Fraction`;
no floating point is used anywhere in this module.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DimensionMismatch, MatrixFormatError, NoUniqueSolution, NotSymmetric

Rational = Fraction


def as_rational(value) -> Fraction:
    """Parse ints, Fractions and ``"p/q"`` strings into a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise MatrixFormatError(f"not a rational entry: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise MatrixFormatError(f"not a rational entry: {value!r}") from exc
    raise MatrixFormatError(f"not a rational entry: {value!r}")


def rational_str(x: Fraction) -> str:
    """Lossless ``"p/q"`` serialization (the denominator is always written)."""
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class RationalMatrix:
    """Dense row-major matrix over Q."""

    rows: int
    cols: int
    entries: tuple

    def __post_init__(self):
        if len(self.entries) != self.rows * self.cols:
            raise DimensionMismatch(
                f"{self.rows}x{self.cols} matrix needs {self.rows * self.cols} entries, got {len(self.entries)}"
            )

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable]) -> "RationalMatrix":
        data = [[as_rational(v) for v in row] for row in rows]
        nrows = len(data)
        ncols = len(data[0]) if nrows else 0
        for r in data:
            if len(r) != ncols:
                raise DimensionMismatch("ragged rows")
        return cls(nrows, ncols, tuple(v for r in data for v in r))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "RationalMatrix":
        return cls(rows, cols, (Fraction(0),) * (rows * cols))

    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        return cls.from_rows([[int(i == j) for j in range(n)] for i in range(n)])

    def __getitem__(self, ij) -> Fraction:
        i, j = ij
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> list:
        return list(self.entries[i * self.cols:(i + 1) * self.cols])

    def to_rows(self) -> list:
        return [self.row(i) for i in range(self.rows)]

    @property
    def T(self) -> "RationalMatrix":
        return RationalMatrix.from_rows([[self[i, j] for i in range(self.rows)] for j in range(self.cols)])

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "RationalMatrix":
        return RationalMatrix.from_rows([[self[i, j] for j in cols] for i in rows])

    def __matmul__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.cols != other.rows:
            raise DimensionMismatch(f"cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}")
        return RationalMatrix.from_rows(
            [[sum((self[i, k] * other[k, j] for k in range(self.cols)), Fraction(0))
              for j in range(other.cols)] for i in range(self.rows)]
        )

    def apply(self, vec: Sequence) -> list:
        if len(vec) != self.cols:
            raise DimensionMismatch("vector length does not match column count")
        v = [as_rational(x) for x in vec]
        return [sum((self[i, k] * v[k] for k in range(self.cols)), Fraction(0)) for i in range(self.rows)]

    def is_integral(self) -> bool:
        return all(x.denominator == 1 for x in self.entries)


@dataclass(frozen=True)
class SymmetricIntMatrix:
    """Exact symmetric integer matrix; symmetry is checked on construction."""

    n: int
    entries: tuple

    def __post_init__(self):
        if self.n < 1:
            raise MatrixFormatError("dimension must be at least 1")
        if len(self.entries) != self.n or any(len(r) != self.n for r in self.entries):
            raise MatrixFormatError(f"expected {self.n} rows of {self.n} integers")
        for i in range(self.n):
            for j in range(i + 1, self.n):
                if self.entries[i][j] != self.entries[j][i]:
                    raise NotSymmetric(i, j, self.entries[i][j], self.entries[j][i])

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable]) -> "SymmetricIntMatrix":
        data = []
        for row in rows:
            out = []
            for v in row:
                if isinstance(v, Fraction):
                    if v.denominator != 1:
                        raise MatrixFormatError(f"non-integer entry {v}")
                    v = v.numerator
                if isinstance(v, bool) or not isinstance(v, int):
                    raise MatrixFormatError(f"non-integer entry {v!r}")
                out.append(int(v))
            data.append(tuple(out))
        return cls(len(data), tuple(data))

    @classmethod
    def diag(cls, values: Sequence[int]) -> "SymmetricIntMatrix":
        n = len(values)
        return cls.from_rows([[values[i] if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def identity(cls, n: int) -> "SymmetricIntMatrix":
        return cls.diag([1] * n)

    def __getitem__(self, ij) -> int:
        i, j = ij
        return self.entries[i][j]

    def to_rows(self) -> list:
        return [list(r) for r in self.entries]

    def to_rational(self) -> RationalMatrix:
        return RationalMatrix.from_rows(self.entries)

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> list:
        return [[self.entries[i][j] for j in cols] for i in rows]

    def diagonal(self) -> list:
        return [self.entries[i][i] for i in range(self.n)]

    def quad(self, x: Sequence[int]) -> int:
        """x^T A x."""
        n = self.n
        total = 0
        for i in range(n):
            xi = x[i]
            if xi == 0:
                continue
            row = self.entries[i]
            total += xi * (row[i] * xi + 2 * sum(row[j] * x[j] for j in range(i + 1, n)))
        return total

    def scaled(self, c: int) -> "SymmetricIntMatrix":
        return SymmetricIntMatrix.from_rows([[c * v for v in r] for r in self.entries])


@dataclass(frozen=True)
class IndexPermutation:
    """Bijection of {0..n-1}; position i of the permuted matrix holds old index image[i]."""

    image: tuple

    def __post_init__(self):
        if sorted(self.image) != list(range(len(self.image))):
            raise MatrixFormatError(f"not a permutation: {self.image}")

    @classmethod
    def identity(cls, n: int) -> "IndexPermutation":
        return cls(tuple(range(n)))

    @classmethod
    def leading(cls, n: int, first: Sequence[int]) -> "IndexPermutation":
        """Put ``first`` in front, keep the remaining indices in ascending order."""
        head = list(first)
        return cls(tuple(head + [i for i in range(n) if i not in head]))

    def __len__(self) -> int:
        return len(self.image)

    def inverse(self) -> "IndexPermutation":
        inv = [0] * len(self.image)
        for i, p in enumerate(self.image):
            inv[p] = i
        return IndexPermutation(tuple(inv))

    def compose(self, other: "IndexPermutation") -> "IndexPermutation":
        """Conjugating by ``self.compose(other)`` equals conjugating by self, then by other."""
        return IndexPermutation(tuple(self.image[j] for j in other.image))


def conjugate_by_permutation(A: SymmetricIntMatrix, p: IndexPermutation) -> SymmetricIntMatrix:
    """Return P^T A P, i.e. the matrix with entries A[p(i), p(j)]."""
    if len(p) != A.n:
        raise DimensionMismatch(f"permutation of length {len(p)} for a {A.n}x{A.n} matrix")
    img = p.image
    return SymmetricIntMatrix(A.n, tuple(tuple(A.entries[img[i]][img[j]] for j in range(A.n)) for i in range(A.n)))


def _integer_rows(rows: Sequence[Sequence]) -> list:
    """Clear denominators row by row; row scaling by a nonzero constant keeps the rank."""
    out = []
    for row in rows:
        row = [as_rational(v) for v in row]
        den = lcm(*(v.denominator for v in row)) if row else 1
        out.append([v.numerator * (den // v.denominator) for v in row])
    return out


def bareiss_rank(rows: Sequence[Sequence[int]]) -> int:
    """Rank of an integer matrix by fraction-free (Bareiss) elimination."""
    m = [list(r) for r in rows]
    nr = len(m)
    if nr == 0:
        return 0
    nc = len(m[0])
    rank = 0
    prev = 1
    for c in range(nc):
        piv = None
        for i in range(rank, nr):
            if m[i][c]:
                piv = i
                break
        if piv is None:
            continue
        if piv != rank:
            m[rank], m[piv] = m[piv], m[rank]
        prow = m[rank]
        p = prow[c]
        for i in range(rank + 1, nr):
            row = m[i]
            f = row[c]
            for j in range(c + 1, nc):
                row[j] = (p * row[j] - f * prow[j]) // prev
            row[c] = 0
        prev = p
        rank += 1
        if rank == nr:
            break
    return rank


def rank_rational(M) -> int:
    """Rank over Q of a RationalMatrix (or any nested sequence of rationals)."""
    rows = M.to_rows() if isinstance(M, (RationalMatrix, SymmetricIntMatrix)) else M
    if rows and all(isinstance(v, int) for r in rows for v in r):
        return bareiss_rank(rows)
    return bareiss_rank(_integer_rows(rows))


def determinant(M) -> Fraction:
    rows = M.to_rows() if isinstance(M, (RationalMatrix, SymmetricIntMatrix)) else [list(r) for r in M]
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise DimensionMismatch("determinant of a non-square matrix")
    a = [[as_rational(v) for v in r] for r in rows]
    det = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if a[i][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det *= a[c][c]
        for i in range(c + 1, n):
            f = a[i][c] / a[c][c]
            if f:
                for j in range(c, n):
                    a[i][j] -= f * a[c][j]
    return det


def solve_square(M, b: Sequence) -> list:
    """Unique solution of Mx = b over Q; raises NoUniqueSolution when M is singular."""
    rows = M.to_rows() if isinstance(M, (RationalMatrix, SymmetricIntMatrix)) else [list(r) for r in M]
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise DimensionMismatch("solve_square needs a square matrix")
    if len(b) != n:
        raise DimensionMismatch("right-hand side length does not match the matrix")
    aug = [[as_rational(v) for v in r] + [as_rational(bi)] for r, bi in zip(rows, b)]
    for c in range(n):
        piv = next((i for i in range(c, n) if aug[i][c] != 0), None)
        if piv is None:
            raise NoUniqueSolution("matrix is singular")
        aug[c], aug[piv] = aug[piv], aug[c]
        inv = 1 / aug[c][c]
        aug[c] = [v * inv for v in aug[c]]
        for i in range(n):
            if i != c and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[c])]
    return [aug[i][n] for i in range(n)]


def solve_consistent(rows: Sequence[Sequence], rhs: Sequence, nvars: int):
    """Solve a possibly over/underdetermined system exactly.

    Returns ``(solution, pivots)`` with free variables set to zero, or
    ``(None, pivots)`` if the system is inconsistent.
    """
    aug = [[as_rational(v) for v in r] + [as_rational(b)] for r, b in zip(rows, rhs)]
    pivots = []
    r = 0
    for c in range(nvars):
        piv = next((i for i in range(r, len(aug)) if aug[i][c] != 0), None)
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        inv = 1 / aug[r][c]
        aug[r] = [v * inv for v in aug[r]]
        for i in range(len(aug)):
            if i != r and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[r])]
        pivots.append(c)
        r += 1
    for i in range(r, len(aug)):
        if aug[i][nvars] != 0:
            return None, pivots
    sol = [Fraction(0)] * nvars
    for i, c in enumerate(pivots):
        sol[c] = aug[i][nvars]
    return sol, pivots


# --- matrix file formats -------------------------------------------------

def parse_matrix_text(text: str) -> SymmetricIntMatrix:
    """First line ``n``, then n whitespace-separated rows of integers."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise MatrixFormatError("empty matrix file")
    try:
        n = int(lines[0])
    except ValueError as exc:
        raise MatrixFormatError(f"first line must be the dimension, got {lines[0]!r}") from exc
    if len(lines) - 1 != n:
        raise MatrixFormatError(f"expected {n} rows, found {len(lines) - 1}")
    rows = []
    for k, ln in enumerate(lines[1:]):
        try:
            row = [int(tok) for tok in ln.split()]
        except ValueError as exc:
            raise MatrixFormatError(f"row {k}: non-integer entry") from exc
        if len(row) != n:
            raise MatrixFormatError(f"row {k}: expected {n} entries, found {len(row)}")
        rows.append(row)
    return SymmetricIntMatrix.from_rows(rows)


def parse_matrix_json(obj) -> SymmetricIntMatrix:
    if isinstance(obj, str):
        obj = json.loads(obj)
    try:
        n = int(obj["n"])
        entries = obj["entries"]
    except (KeyError, TypeError) as exc:
        raise MatrixFormatError('JSON matrix needs fields {"n", "entries"}') from exc
    if len(entries) != n or any(len(r) != n for r in entries):
        raise MatrixFormatError(f"entries must be {n} rows of {n} integers")
    return SymmetricIntMatrix.from_rows(entries)


def load_matrix(path) -> SymmetricIntMatrix:
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return parse_matrix_json(text)
    return parse_matrix_text(text)


def format_matrix_text(A: SymmetricIntMatrix) -> str:
    return "\n".join([str(A.n)] + [" ".join(str(v) for v in row) for row in A.entries]) + "\n"


def parse_rational_matrix_text(text: str) -> RationalMatrix:
    """General (possibly rectangular) rational matrix.

    Header line ``rows cols`` (or just ``n`` for square), then the rows;
    entries may be ``p/q``. JSON: ``{"entries": [[...]]}``.
    """
    if text.lstrip().startswith("{"):
        obj = json.loads(text)
        return RationalMatrix.from_rows(obj["entries"])
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise MatrixFormatError("empty matrix file")
    try:
        head = [int(tok) for tok in lines[0].split()]
    except ValueError as exc:
        raise MatrixFormatError("first line must be 'rows cols' or 'n'") from exc
    if len(head) not in (1, 2):
        raise MatrixFormatError("first line must be 'rows cols' or 'n'")
    rows, cols = (head[0], head[0]) if len(head) == 1 else head
    body = [[as_rational(tok) for tok in ln.split()] for ln in lines[1:]]
    if len(body) != rows or any(len(r) != cols for r in body):
        raise MatrixFormatError(f"expected {rows} rows of {cols} entries")
    if rows == 0:
        return RationalMatrix(0, cols, ())
    return RationalMatrix.from_rows(body)


def load_rational_matrix(path) -> RationalMatrix:
    return parse_rational_matrix_text(Path(path).read_text())
