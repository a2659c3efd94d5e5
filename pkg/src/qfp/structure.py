"""Canonical block forms for matrices of off-diagonal rank 1 and 2.

Each ``decompose_*`` returns a frozen form whose ``assemble()`` rebuilds the
input exactly. ``random_form`` draws instances of each form for round-trip
testing. Indices are 0-based throughout; ``QuintupleSelection.one_based``
gives the 1-based labels used in hand calculations.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import combinations
from math import gcd, lcm

from .errors import (
    CaseMismatch,
    DimensionMismatch,
    InternalInconsistency,
    NonIntegralAssembly,
    NoQuintuple,
    NotOffDiagRank1,
    NotOffDiagRank2,
)
from .linalg import (
    IndexPermutation,
    SymmetricIntMatrix,
    conjugate_by_permutation,
    rank_rational,
    rational_str,
    solve_consistent,
)
from .offdiag import offdiag_rank

CASE11, CASE21, CASE22 = "Case11", "Case21", "Case22"
RANK1_QUINTUPLE, RANK2_QUINTUPLE = "Rank1Quintuple", "Rank2Quintuple"


def _F(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def _rat_list(xs):
    return [rational_str(x) for x in xs]


def _rat_rows(rows):
    return [[rational_str(x) for x in r] for r in rows]


def _assemble(block, perm: IndexPermutation) -> SymmetricIntMatrix:
    """Integer matrix A with P^T A P = block."""
    rows = []
    for i, r in enumerate(block):
        row = []
        for j, v in enumerate(r):
            v = _F(v)
            if v.denominator != 1:
                raise NonIntegralAssembly(f"entry ({i}, {j}) of the block form is {v}")
            row.append(v.numerator)
        rows.append(row)
    return conjugate_by_permutation(SymmetricIntMatrix.from_rows(rows), perm.inverse())


def _rank2rows(u, v) -> int:
    k = None
    for j in range(len(u)):
        if u[j] or v[j]:
            k = j
            break
    if k is None:
        return 0
    uk, vk = u[k], v[k]
    for j in range(k + 1, len(u)):
        if uk * v[j] != vk * u[j]:
            return 2
    return 1


def _det2(m) -> Fraction:
    return _F(m[0][0]) * m[1][1] - _F(m[0][1]) * m[1][0]


# --- forms ---------------------------------------------------------------

@dataclass(frozen=True)
class Rank1Form:
    """P^T A P = [[a, xi^T], [xi, D + h xi xi^T]]."""

    perm: IndexPermutation
    a: int
    xi: tuple
    d: tuple
    h: Fraction

    @property
    def n(self) -> int:
        return len(self.xi) + 1

    def block_matrix(self) -> list:
        m = len(self.xi)
        rows = [[_F(self.a)] + [_F(x) for x in self.xi]]
        for k in range(m):
            row = [_F(self.xi[k])]
            for l in range(m):
                v = self.h * self.xi[k] * self.xi[l]
                if k == l:
                    v += self.d[k]
                row.append(v)
            rows.append(row)
        return rows

    def assemble(self) -> SymmetricIntMatrix:
        return _assemble(self.block_matrix(), self.perm)

    def to_json(self) -> dict:
        return {
            "form": "Rank1Form",
            "perm": list(self.perm.image),
            "a": self.a,
            "xi": list(self.xi),
            "d": _rat_list(self.d),
            "h": rational_str(self.h),
        }


@dataclass(frozen=True)
class Rank2CaseTag:
    case: str
    perm: IndexPermutation
    rank_B: int
    rank_B1: int
    rank_B2: int

    def to_json(self) -> dict:
        return {
            "case": self.case,
            "perm": list(self.perm.image),
            "rank_B": self.rank_B,
            "rank_B1": self.rank_B1,
            "rank_B2": self.rank_B2,
        }


@dataclass(frozen=True)
class Rank2Form11:
    """P^T A P = [[A1, B, 0], [B^T, A2, C], [0, C^T, D]]."""

    perm: IndexPermutation
    A1: tuple
    B: tuple
    A2: tuple
    C: tuple
    d: tuple

    @property
    def n(self) -> int:
        return len(self.d) + 4

    def block_matrix(self) -> list:
        n, m = self.n, len(self.d)
        rows = [[Fraction(0)] * n for _ in range(n)]
        for i in range(2):
            for j in range(2):
                rows[i][j] = _F(self.A1[i][j])
                rows[i][2 + j] = _F(self.B[i][j])
                rows[2 + j][i] = _F(self.B[i][j])
                rows[2 + i][2 + j] = _F(self.A2[i][j])
            for k in range(m):
                rows[2 + i][4 + k] = rows[4 + k][2 + i] = _F(self.C[i][k])
        for k in range(m):
            rows[4 + k][4 + k] = _F(self.d[k])
        return rows

    def assemble(self) -> SymmetricIntMatrix:
        return _assemble(self.block_matrix(), self.perm)

    def to_json(self) -> dict:
        return {
            "form": "Rank2Form11",
            "perm": list(self.perm.image),
            "A1": [list(r) for r in self.A1],
            "B": [list(r) for r in self.B],
            "A2": [list(r) for r in self.A2],
            "C": [list(r) for r in self.C],
            "d": _rat_list(self.d),
        }


@dataclass(frozen=True)
class Rank2Form21:
    """P^T A P = [[A1, g1, g2 xi^T], [g1^T, a, v^T], [xi g2^T, v, D + h xi xi^T]]."""

    perm: IndexPermutation
    A1: tuple
    gamma1: tuple
    gamma2: tuple
    xi: tuple
    a: int
    v: tuple
    h: Fraction
    d: tuple

    @property
    def n(self) -> int:
        return len(self.xi) + 3

    def block_matrix(self) -> list:
        n, m = self.n, len(self.xi)
        rows = [[Fraction(0)] * n for _ in range(n)]
        for i in range(2):
            for j in range(2):
                rows[i][j] = _F(self.A1[i][j])
            rows[i][2] = rows[2][i] = _F(self.gamma1[i])
            for k in range(m):
                rows[i][3 + k] = rows[3 + k][i] = _F(self.gamma2[i]) * self.xi[k]
        rows[2][2] = _F(self.a)
        for k in range(m):
            rows[2][3 + k] = rows[3 + k][2] = _F(self.v[k])
            for l in range(m):
                val = self.h * self.xi[k] * self.xi[l]
                if k == l:
                    val += self.d[k]
                rows[3 + k][3 + l] = val
        return rows

    def assemble(self) -> SymmetricIntMatrix:
        return _assemble(self.block_matrix(), self.perm)

    def to_json(self) -> dict:
        return {
            "form": "Rank2Form21",
            "perm": list(self.perm.image),
            "A1": [list(r) for r in self.A1],
            "gamma1": list(self.gamma1),
            "gamma2": _rat_list(self.gamma2),
            "xi": list(self.xi),
            "a": self.a,
            "v": list(self.v),
            "h": rational_str(self.h),
            "d": _rat_list(self.d),
        }


@dataclass(frozen=True)
class Rank2Form22:
    """P^T A P = [[A1, Gamma C], [C^T Gamma^T, D + C^T H C]]."""

    perm: IndexPermutation
    A1: tuple
    Gamma: tuple
    C: tuple
    H: tuple
    d: tuple
    h_underdetermined: bool = field(default=False, compare=False)

    @property
    def n(self) -> int:
        return len(self.d) + 2

    def block_matrix(self) -> list:
        n, m = self.n, len(self.d)
        G = [[_F(x) for x in r] for r in self.Gamma]
        H = [[_F(x) for x in r] for r in self.H]
        C = self.C
        rows = [[Fraction(0)] * n for _ in range(n)]
        for i in range(2):
            for j in range(2):
                rows[i][j] = _F(self.A1[i][j])
            for k in range(m):
                rows[i][2 + k] = rows[2 + k][i] = G[i][0] * C[0][k] + G[i][1] * C[1][k]
        for k in range(m):
            for l in range(m):
                val = sum(C[i][k] * H[i][j] * C[j][l] for i in range(2) for j in range(2))
                if k == l:
                    val += self.d[k]
                rows[2 + k][2 + l] = val
        return rows

    def assemble(self) -> SymmetricIntMatrix:
        return _assemble(self.block_matrix(), self.perm)

    def to_json(self) -> dict:
        return {
            "form": "Rank2Form22",
            "perm": list(self.perm.image),
            "A1": [list(r) for r in self.A1],
            "Gamma": _rat_rows(self.Gamma),
            "C": [list(r) for r in self.C],
            "H": _rat_rows(self.H),
            "d": _rat_list(self.d),
            "h_underdetermined": self.h_underdetermined,
        }


@dataclass(frozen=True)
class QuintupleSelection:
    b: tuple
    kind: str

    @property
    def one_based(self) -> tuple:
        return tuple(i + 1 for i in self.b)

    def to_json(self) -> dict:
        return {"kind": self.kind, "b": list(self.b), "b_one_based": list(self.one_based)}


# --- off-diagonal rank 1 ---------------------------------------------------

def _rank1_at(A: SymmetricIntMatrix, r: int, j: int):
    perm = IndexPermutation.leading(A.n, [r, j])
    P = conjugate_by_permutation(A, perm).entries
    m = A.n - 1
    xi = tuple(P[0][1:])
    T = [row[1:] for row in P[1:]]
    h = Fraction(0)
    for k, l in combinations(range(m), 2):
        if xi[k] and xi[l]:
            h = Fraction(T[k][l], xi[k] * xi[l])
            break
    for k, l in combinations(range(m), 2):
        if T[k][l] != h * xi[k] * xi[l]:
            return None
    d = tuple(T[k][k] - h * xi[k] * xi[k] for k in range(m))
    return Rank1Form(perm, P[0][0], xi, d, h)


def decompose_rank1(A: SymmetricIntMatrix, check: bool = True) -> Rank1Form:
    """Rank-one off-diagonal structure [[a, xi^T], [xi, D + h xi xi^T]].

    Rows are tried in order as the leading row; the first one whose trailing
    block is diagonal plus h xi xi^T wins. When xi has a single nonzero
    coordinate h is not identifiable and is set to 0.
    """
    if check:
        if A.n < 2 or offdiag_rank(A).value != 1:
            raise NotOffDiagRank1("matrix does not have off-diagonal rank 1")
    e = A.entries
    for r in range(A.n):
        j = next((c for c in range(A.n) if c != r and e[r][c]), None)
        if j is None:
            continue
        form = _rank1_at(A, r, j)
        if form is not None:
            return form
    raise InternalInconsistency("no leading row gives a diagonal residual A1 - h xi xi^T")


def check_rank1_quintuple(f: Rank1Form, b) -> bool:
    if len(set(b)) != 5 or any(not 0 <= i < len(f.xi) for i in b):
        return False
    prod = _F(f.xi[b[0]])
    for i in b[1:]:
        prod *= f.d[i]
    return prod != 0


def find_quintuple_rank1(f: Rank1Form, rank_A: int | None = None) -> QuintupleSelection:
    """Indices with xi[b1] * d[b2] * d[b3] * d[b4] * d[b5] != 0."""
    if rank_A is None:
        rank_A = rank_rational(f.block_matrix())
    c, d = f.xi, f.d
    support = [i for i in range(len(d)) if d[i] != 0]
    if len(support) >= 5:
        b1 = next(i for i in range(len(c)) if c[i] != 0)
        b = (b1,) + tuple(i for i in support if i != b1)[:4]
        return QuintupleSelection(b, RANK1_QUINTUPLE)
    if len(support) == 4:
        outside = [j for j in range(len(c)) if c[j] != 0 and j not in support]
        if outside:
            return QuintupleSelection((outside[0],) + tuple(support), RANK1_QUINTUPLE)
        reason = "rank(D) = 4 and xi vanishes outside the support of D"
    else:
        reason = f"rank(D) = {len(support)} < 4"
    if rank_A >= 6:
        raise InternalInconsistency(f"rank(A) = {rank_A} >= 6 but no quintuple exists: {reason}")
    raise NoQuintuple(f"rank(A) = {rank_A}: {reason}")


# --- off-diagonal rank 2 ---------------------------------------------------

def _tag_for(P, perm: IndexPermutation):
    """(case, perm, rank_B1, rank_B2) for the block B at rows {0,1} x cols {2,3} of P."""
    n = len(P)
    if n < 4:
        return None
    if P[0][2] * P[1][3] - P[0][3] * P[1][2] == 0:
        return None
    rest = list(range(4, n))
    u, v = P[0], P[1]
    r1 = _rank2rows([u[2]] + [u[k] for k in rest], [v[2]] + [v[k] for k in rest])
    r2 = _rank2rows([u[3]] + [u[k] for k in rest], [v[3]] + [v[k] for k in rest])
    if r1 == 1 and r2 == 1:
        return CASE11, perm, r1, r2
    if r1 == 2 and r2 == 2:
        return CASE22, perm, r1, r2
    if r1 == 1:  # orient so the rank-1 block sits in column 3
        img = perm.image
        perm = IndexPermutation((img[0], img[1], img[3], img[2]) + img[4:])
        r1, r2 = r2, r1
    return CASE21, perm, r1, r2


def rank2_tag_at(A: SymmetricIntMatrix, perm: IndexPermutation) -> Rank2CaseTag:
    """Case tag for the block B placed by a given permutation (no search)."""
    P = conjugate_by_permutation(A, perm).entries
    res = _tag_for(P, perm)
    if res is None:
        raise CaseMismatch("the permutation does not place an invertible 2x2 off-diagonal block at rows {0,1} x cols {2,3}")
    case, perm, r1, r2 = res
    return Rank2CaseTag(case, perm, 2, r1, r2)


def classify_rank2(A: SymmetricIntMatrix, check: bool = True) -> Rank2CaseTag:
    """Tag a matrix of off-diagonal rank 2 as Case11, Case21 or Case22.

    Every placement of an invertible off-diagonal 2x2 block B is examined.
    The reported case is the most degenerate one attained anywhere
    (Case11, then Case21, then Case22), which makes the tag independent of
    how the input rows are ordered; within that case the lexicographically
    first placement (r0 < r1, c0 < c1) fixes the permutation.
    """
    n = A.n
    if check and (n < 4 or offdiag_rank(A).value != 2):
        raise NotOffDiagRank2("matrix does not have off-diagonal rank 2")
    if n < 4:
        raise NotOffDiagRank2("off-diagonal rank 2 needs n >= 4")
    e = A.entries
    found = {}
    for r0, r1 in combinations(range(n), 2):
        others = [i for i in range(n) if i not in (r0, r1)]
        u, v = e[r0], e[r1]
        for c0, c1 in combinations(others, 2):
            if u[c0] * v[c1] - u[c1] * v[c0] == 0:
                continue
            rest = [i for i in others if i != c0 and i != c1]
            k1 = _rank2rows([u[c0]] + [u[k] for k in rest], [v[c0]] + [v[k] for k in rest])
            k2 = _rank2rows([u[c1]] + [u[k] for k in rest], [v[c1]] + [v[k] for k in rest])
            if k1 == 1 and k2 == 1:
                case, order = CASE11, (c0, c1)
            elif k1 == 2 and k2 == 2:
                case, order = CASE22, (c0, c1)
            else:
                case, order = CASE21, ((c0, c1) if k1 == 2 else (c1, c0))
            if case not in found:
                perm = IndexPermutation(tuple([r0, r1, *order] + rest))
                if case == CASE21:
                    k1, k2 = 2, 1
                found[case] = Rank2CaseTag(case, perm, 2, k1, k2)
            if CASE11 in found:
                return found[CASE11]
    for case in (CASE11, CASE21, CASE22):
        if case in found:
            return found[case]
    raise NotOffDiagRank2("no invertible off-diagonal 2x2 block")


def _expect(tag: Rank2CaseTag, case: str, A: SymmetricIntMatrix):
    if tag.case != case:
        raise CaseMismatch(f"tag is {tag.case}, expected {case}")
    if len(tag.perm) != A.n:
        raise DimensionMismatch("tag permutation does not match the matrix dimension")
    return conjugate_by_permutation(A, tag.perm).entries


def decompose_case11(A: SymmetricIntMatrix, tag: Rank2CaseTag) -> Rank2Form11:
    P = _expect(tag, CASE11, A)
    n = A.n
    A1 = tuple(tuple(P[i][0:2]) for i in range(2))
    B = tuple(tuple(P[i][2:4]) for i in range(2))
    if _det2(B) == 0:
        raise CaseMismatch("block B is singular")
    A2 = tuple(tuple(P[2 + i][2:4]) for i in range(2))
    C = tuple(tuple(P[2 + i][4:]) for i in range(2))
    for i in range(2):
        for k in range(4, n):
            if P[i][k]:
                raise InternalInconsistency(f"gamma_j != 0 for column {k}: case (1,1) forces a zero top-right block")
    for k, l in combinations(range(4, n), 2):
        if P[k][l]:
            raise InternalInconsistency(f"trailing block has off-diagonal entry at ({k}, {l})")
    d = tuple(Fraction(P[k][k]) for k in range(4, n))
    return Rank2Form11(tag.perm, A1, B, A2, C, d)


def _primitive(row) -> tuple:
    g = 0
    for x in row:
        g = gcd(g, x)
    xi = [x // g for x in row]
    lead = next(x for x in xi if x)
    if lead < 0:
        xi = [-x for x in xi]
    return tuple(xi)


def decompose_case21(A: SymmetricIntMatrix, tag: Rank2CaseTag) -> Rank2Form21:
    """Case (2,1): xi is the primitive integer vector spanning B2's rows,
    with positive leading entry; gamma2 carries the scale."""
    P = _expect(tag, CASE21, A)
    n = A.n
    m = n - 3
    A1 = tuple(tuple(P[i][0:2]) for i in range(2))
    gamma1 = (P[0][2], P[1][2])
    a = P[2][2]
    v = tuple(P[2][3:])
    B2 = [P[0][3:], P[1][3:]]
    base = B2[0] if any(B2[0]) else B2[1]
    if not any(base):
        raise CaseMismatch("B2 is zero")
    xi = _primitive(base)
    k0 = next(k for k in range(m) if xi[k])
    gamma2 = (Fraction(B2[0][k0], xi[k0]), Fraction(B2[1][k0], xi[k0]))
    for i in range(2):
        for k in range(m):
            if B2[i][k] != gamma2[i] * xi[k]:
                raise CaseMismatch("B2 does not have rank 1")
    if gamma1[0] * gamma2[1] - gamma1[1] * gamma2[0] == 0:
        raise CaseMismatch("(gamma1, gamma2) is singular")
    T = [row[3:] for row in P[3:]]
    h = Fraction(0)
    for k, l in combinations(range(m), 2):
        if xi[k] and xi[l]:
            h = Fraction(T[k][l], xi[k] * xi[l])
            break
    for k, l in combinations(range(m), 2):
        if T[k][l] != h * xi[k] * xi[l]:
            raise InternalInconsistency(f"trailing block is not D + h xi xi^T at ({k}, {l})")
    d = tuple(T[k][k] - h * xi[k] * xi[k] for k in range(m))
    return Rank2Form21(tag.perm, A1, gamma1, gamma2, xi, a, v, h, d)


def decompose_case22(A: SymmetricIntMatrix, tag: Rank2CaseTag) -> Rank2Form22:
    """Case (2,2) with the gauge fixed by B's columns.

    The integer matrix C is lam * B^{-1} R where R is the top-right block and
    lam clears denominators; Gamma = B / lam. H solves the off-diagonal
    equations of the trailing block; unpinned components are set to 0 and
    flagged via ``h_underdetermined``.
    """
    P = _expect(tag, CASE22, A)
    n = A.n
    m = n - 2
    A1 = tuple(tuple(P[i][0:2]) for i in range(2))
    R = [P[0][2:], P[1][2:]]
    b00, b01, b10, b11 = R[0][0], R[0][1], R[1][0], R[1][1]
    det = b00 * b11 - b01 * b10
    if det == 0:
        raise CaseMismatch("block B is singular")
    raw = [[Fraction(b11 * R[0][k] - b01 * R[1][k], det) for k in range(m)],
           [Fraction(-b10 * R[0][k] + b00 * R[1][k], det) for k in range(m)]]
    lam = lcm(*(x.denominator for r in raw for x in r))
    C = tuple(tuple((x * lam).numerator for x in r) for r in raw)
    Gamma = ((Fraction(b00, lam), Fraction(b01, lam)), (Fraction(b10, lam), Fraction(b11, lam)))
    T = [row[2:] for row in P[2:]]
    eqs, rhs = [], []
    for k, l in combinations(range(m), 2):
        c0k, c1k, c0l, c1l = C[0][k], C[1][k], C[0][l], C[1][l]
        eqs.append([c0k * c0l, c0k * c1l + c1k * c0l, c1k * c1l])
        rhs.append(T[k][l])
    sol, pivots = solve_consistent(eqs, rhs, 3)
    if sol is None:
        raise InternalInconsistency("trailing block off-diagonal is not of the form C^T H C")
    h11, h12, h22 = sol
    H = ((h11, h12), (h12, h22))
    d = tuple(
        T[k][k] - (h11 * C[0][k] ** 2 + 2 * h12 * C[0][k] * C[1][k] + h22 * C[1][k] ** 2)
        for k in range(m)
    )
    return Rank2Form22(tag.perm, A1, Gamma, C, H, d, h_underdetermined=len(pivots) < 3)


def check_case22_quintuple(f: Rank2Form22, b) -> bool:
    if len(set(b)) != 5 or any(not 0 <= i < len(f.d) for i in b):
        return False
    C = f.C
    pair = [[C[0][b[0]], C[0][b[1]]], [C[1][b[0]], C[1][b[1]]]]
    return rank_rational(pair) == 2 and all(f.d[i] != 0 for i in b[2:])


def find_quintuple_case22(f: Rank2Form22, rank_A: int | None = None) -> QuintupleSelection:
    """Indices with rank(xi_b1, xi_b2) = 2 and d[b3] d[b4] d[b5] != 0 (xi_i = C[:, i])."""
    if rank_A is None:
        rank_A = rank_rational(f.block_matrix())
    C, d = f.C, f.d
    m = len(d)
    support = [i for i in range(m) if d[i] != 0]

    def indep(i, j):
        return C[0][i] * C[1][j] - C[1][i] * C[0][j] != 0

    def first_pair(candidates):
        for i, j in combinations(candidates, 2):
            if indep(i, j):
                left = [k for k in support if k != i and k != j]
                if len(left) >= 3:
                    return QuintupleSelection((i, j) + tuple(left[:3]), RANK2_QUINTUPLE)
        return None

    if len(support) == 4:
        # boundary case: take the xi-pair outside the support of D
        q = first_pair([i for i in range(m) if i not in support])
        if q is not None:
            return q
    q = first_pair(range(m))
    if q is not None:
        return q
    if len(support) < 3:
        reason = f"rank(D) = {len(support)} < 3"
    else:
        reason = f"rank(D) = {len(support)} and no independent column pair of C avoids three nonzero d's"
    if rank_A >= 8:
        raise InternalInconsistency(f"rank(A) = {rank_A} >= 8 but no quintuple exists: {reason}")
    raise NoQuintuple(f"rank(A) = {rank_A}: {reason}")


def decompose(A: SymmetricIntMatrix):
    """Detect off-diagonal rank 1 or 2 and return ``(form, tag)`` (tag is None for rank 1)."""
    r = offdiag_rank(A).value
    if r == 1:
        return decompose_rank1(A, check=False), None
    if r == 2:
        tag = classify_rank2(A, check=False)
        fn = {CASE11: decompose_case11, CASE21: decompose_case21, CASE22: decompose_case22}[tag.case]
        return fn(A, tag), tag
    raise NotOffDiagRank2(f"off-diagonal rank is {r}; only ranks 1 and 2 have a structure decomposition")


# --- random instances -----------------------------------------------------

FORM_KINDS = {"rank1": Rank1Form, "case11": Rank2Form11, "case21": Rank2Form21, "case22": Rank2Form22}
MIN_N = {"rank1": 2, "case11": 4, "case21": 4, "case22": 4}


def _nz(rng, lo=-3, hi=3):
    while True:
        x = rng.randint(lo, hi)
        if x:
            return x


def _sym2(rng, lo=-4, hi=4):
    b = rng.randint(lo, hi)
    return ((rng.randint(lo, hi), b), (b, rng.randint(lo, hi)))


def _vec2_nonparallel(rng, used, lo=-4, hi=4):
    """Nonzero integer 2-vector not parallel to any vector in ``used``."""
    while True:
        p = (rng.randint(lo, hi), rng.randint(lo, hi))
        if p == (0, 0):
            continue
        if all(p[0] * q[1] != p[1] * q[0] for q in used):
            used.append(p)
            return p


def _random_S(rng):
    while True:
        den = rng.choice((1, 1, 2))
        s11, s12, s22 = rng.randint(-3, 3), rng.randint(-3, 3), rng.randint(-3, 3)
        if s11 * s22 - s12 * s12 != 0:
            return ((Fraction(s11, den), Fraction(s12, den)), (Fraction(s12, den), Fraction(s22, den)))


def _bil(p, S, q) -> Fraction:
    return sum(p[i] * S[i][j] * q[j] for i in range(2) for j in range(2))


def _random_perm(rng, n) -> IndexPermutation:
    img = list(range(n))
    rng.shuffle(img)
    return IndexPermutation(tuple(img))


def _diag_fill(rng, offsets, zero_prob=0.2):
    """d_k with d_k + offsets[k] integral, zero with probability zero_prob when allowed."""
    out = []
    for off in offsets:
        frac = _F(off) - (_F(off).numerator // _F(off).denominator)
        if frac == 0 and rng.random() < zero_prob:
            out.append(Fraction(0))
        else:
            out.append(Fraction(_nz(rng, -4, 4)) - frac)
    return tuple(out)


def _draw_rank1(rng, n):
    m = n - 1
    den = rng.choice((1, 1, 2, 3))
    h = Fraction(rng.randint(-3, 3), den) if rng.random() < 0.8 else Fraction(0)
    scale = den if rng.random() < 0.6 else 1
    while True:
        xi = tuple(scale * (rng.randint(-3, 3) if rng.random() < 0.8 else 0) for _ in range(m))
        if any(xi):
            break
    d = _diag_fill(rng, [h * x * x for x in xi])
    return Rank1Form(_random_perm(rng, n), rng.randint(-5, 5), xi, d, h)


def _draw_case11(rng, n):
    m = n - 4
    decoupled = rng.random() < 0.2
    a01 = rng.randint(-3, 3) if decoupled else 0
    A1 = ((rng.randint(-4, 4), a01), (a01, rng.randint(-4, 4)))
    while True:
        B = ((rng.randint(-3, 3), rng.randint(-3, 3)), (rng.randint(-3, 3), rng.randint(-3, 3)))
        if _det2(B) != 0:
            break
    A2 = _sym2(rng)
    if decoupled:
        C = ((0,) * m, (0,) * m)
    else:
        C = tuple(tuple(rng.randint(-3, 3) for _ in range(m)) for _ in range(2))
    d = _diag_fill(rng, [0] * m)
    return Rank2Form11(_random_perm(rng, n), A1, B, A2, C, d)


def _draw_case21(rng, n):
    # off-diagonal part is P^T S P with the trailing columns of P parallel
    m = n - 3
    S = _random_S(rng)
    used = []
    p0, p1, p2, rho = (_vec2_nonparallel(rng, used) for _ in range(4))
    while True:
        xi = tuple(rng.randint(-3, 3) for _ in range(m))
        if xi[0] and (m < 2 or sum(1 for x in xi if x) >= 2):
            break
    g = 0
    for x in xi:
        g = gcd(g, x)
    xi = tuple(x // g for x in xi)
    if xi[0] < 0:
        xi = tuple(-x for x in xi)
    a01 = _bil(p0, S, p1)
    A1 = ((rng.randint(-4, 4), a01), (a01, rng.randint(-4, 4)))
    gamma1 = (_bil(p0, S, p2), _bil(p1, S, p2))
    gamma2 = (_bil(p0, S, rho), _bil(p1, S, rho))
    mu = _bil(p2, S, rho)
    v = tuple(mu * x for x in xi)
    h = _bil(rho, S, rho)
    d = _diag_fill(rng, [h * x * x for x in xi])
    return Rank2Form21(_random_perm(rng, n), A1, gamma1, gamma2, xi, rng.randint(-4, 4), v, h, d)


def _draw_case22(rng, n):
    # off-diagonal part is P^T S P with pairwise non-parallel columns
    m = n - 2
    S = _random_S(rng)
    used = []
    px = [_vec2_nonparallel(rng, used) for _ in range(2)]
    cols = [_vec2_nonparallel(rng, used, -5, 5) for _ in range(m)]
    a01 = _bil(px[0], S, px[1])
    A1 = ((rng.randint(-4, 4), a01), (a01, rng.randint(-4, 4)))
    Gamma = tuple(tuple(sum(px[i][k] * S[k][j] for k in range(2)) for j in range(2)) for i in range(2))
    C = (tuple(c[0] for c in cols), tuple(c[1] for c in cols))
    d = _diag_fill(rng, [_bil(c, S, c) for c in cols])
    return Rank2Form22(_random_perm(rng, n), A1, Gamma, C, S, d)


_DRAW = {"rank1": _draw_rank1, "case11": _draw_case11, "case21": _draw_case21, "case22": _draw_case22}


def _integral_fields(form):
    """Entries that appear verbatim in the assembled matrix, as ints."""
    ints = lambda xs: tuple(int(x) for x in xs)  # noqa: E731
    if isinstance(form, (Rank2Form21, Rank2Form22)):
        form = replace(form, A1=tuple(ints(r) for r in form.A1))
    if isinstance(form, Rank2Form21):
        form = replace(form, gamma1=ints(form.gamma1), v=ints(form.v))
    return form


def random_form(kind: str, n: int, seed: int, max_tries: int = 1000):
    """Draw a form whose assembled matrix is integral (non-integral draws are rejected)."""
    if kind not in _DRAW:
        raise ValueError(f"unknown form kind {kind!r}; choose from {sorted(_DRAW)}")
    if n < MIN_N[kind]:
        raise DimensionMismatch(f"{kind} needs n >= {MIN_N[kind]}")
    rng = random.Random(seed)
    for _ in range(max_tries):
        form = _DRAW[kind](rng, n)
        try:
            form.assemble()
        except NonIntegralAssembly:
            continue
        return _integral_fields(form)
    raise NonIntegralAssembly(f"no integral {kind} draw in {max_tries} attempts")


def generate_from_form(spec, seed: int = 0, n: int = 8) -> SymmetricIntMatrix:
    """Matrix for a given form instance, or for a random draw of a form kind.

    ``spec`` is either one of the four form objects (assembled as is) or a
    kind name ("rank1", "case11", "case21", "case22") drawn with ``seed``.
    """
    if isinstance(spec, (Rank1Form, Rank2Form11, Rank2Form21, Rank2Form22)):
        return spec.assemble()
    if isinstance(spec, type):
        spec = next(k for k, v in FORM_KINDS.items() if v is spec)
    return random_form(spec, n, seed).assemble()

