"""Off-diagonal rank: the largest rank of a submatrix A[I, J] with I and J disjoint."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .errors import NoOffDiagonalSubmatrix
from .linalg import SymmetricIntMatrix, bareiss_rank


@dataclass(frozen=True)
class OffDiagReport:
    value: int
    witness_rows: tuple
    witness_cols: tuple

    def to_json(self) -> dict:
        return {"value": self.value, "witness_rows": list(self.witness_rows), "witness_cols": list(self.witness_cols)}


def _block_rank(A: SymmetricIntMatrix, rows, cols) -> int:
    e = A.entries
    return bareiss_rank([[e[i][j] for j in cols] for i in rows])


def _check(A: SymmetricIntMatrix):
    if A.n < 2:
        raise NoOffDiagonalSubmatrix("off-diagonal rank needs n >= 2")


def _nonempty_subsets(items):
    for k in range(1, len(items) + 1):
        yield from combinations(items, k)


def offdiag_rank_oracle(A: SymmetricIntMatrix) -> OffDiagReport:
    """Exhaustive search over every pair of nonempty disjoint index sets."""
    _check(A)
    n = A.n
    best = None
    for J in _nonempty_subsets(range(n)):
        rest = [i for i in range(n) if i not in J]
        for I in _nonempty_subsets(rest):
            r = _block_rank(A, I, J)
            key = (-r, J, I)
            if best is None or key < best:
                best = key
    r, J, I = best
    return OffDiagReport(-r, tuple(I), tuple(J))


def _lex_subsets(items):
    """Nonempty subsets in lexicographic order of their sorted tuples."""
    def rec(prefix, start):
        for k in range(start, len(items)):
            cur = prefix + (items[k],)
            yield cur
            yield from rec(cur, k + 1)
    yield from rec((), 0)


def _smallest_rows(A: SymmetricIntMatrix, J, value) -> tuple:
    """Lexicographically smallest nonempty I outside J with rank(A[I, J]) = value.

    Rank is monotone in I, so a prefix can be completed iff adding every
    larger candidate reaches ``value``.
    """
    cand = [i for i in range(A.n) if i not in J]
    prefix = []
    while True:
        if prefix and _block_rank(A, prefix, J) >= value:
            return tuple(prefix)
        start = cand.index(prefix[-1]) + 1 if prefix else 0
        for k in range(start, len(cand)):
            trial = prefix + [cand[k]]
            if _block_rank(A, trial + cand[k + 1:], J) >= value:
                prefix = trial
                break
        else:  # pragma: no cover - unreachable when value is attained
            raise AssertionError("no row set attains the off-diagonal rank")


def offdiag_rank(A: SymmetricIntMatrix) -> OffDiagReport:
    """Fast path: only 2^n column sets J, with rows I = complement(J).

    Enlarging I never lowers rank(A[I, J]), so the maximum over pairs is the
    maximum over J of rank(A[comp(J), J]). The witness uses the same
    tie-break as the oracle: smallest J, then smallest I.
    """
    _check(A)
    n = A.n
    ceiling = min(n // 2, bareiss_rank(A.to_rows()))
    value = 0
    for size in range(1, n):
        if value >= ceiling:
            break
        if min(size, n - size) <= value:
            continue
        for J in combinations(range(n), size):
            comp = [i for i in range(n) if i not in J]
            r = _block_rank(A, comp, J)
            if r > value:
                value = r
                if value >= min(size, n - size) or value >= ceiling:
                    break
    for J in _lex_subsets(list(range(n))):
        if len(J) == n:
            continue
        comp = [i for i in range(n) if i not in J]
        if _block_rank(A, comp, J) == value:
            return OffDiagReport(value, _smallest_rows(A, J, value), tuple(J))
    raise AssertionError("off-diagonal rank witness not found")  # pragma: no cover
