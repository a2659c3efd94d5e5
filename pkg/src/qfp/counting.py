"""Exact lattice-point counts: prime-power solutions of x^T A x = t, the
bilinear system x^T C y = 0 (with optional x^T H = 0), the paired system
x^T C x = y^T C y and log-log growth fits."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from .errors import DegenerateSamples, DimensionMismatch
from .linalg import RationalMatrix, SymmetricIntMatrix, as_rational
from .local import ProblemInstance, check_budget, von_mangoldt_table


@dataclass(frozen=True)
class Box:
    """Closed coordinate range [lo, hi]."""

    lo: int
    hi: int

    @classmethod
    def positive(cls, X: int) -> "Box":
        return cls(1, X)

    @classmethod
    def symmetric(cls, X: int) -> "Box":
        return cls(-X, X)

    def __len__(self) -> int:
        return max(0, self.hi - self.lo + 1)

    def __contains__(self, v) -> bool:
        return self.lo <= v <= self.hi

    def values(self) -> range:
        return range(self.lo, self.hi + 1)


def _box(X, box) -> Box:
    if isinstance(box, Box):
        return box
    if box in (None, "positive"):
        return Box.positive(X)
    if box == "symmetric":
        return Box.symmetric(X)
    raise ValueError(f"unknown box {box!r}")


# --- prime-power solutions -------------------------------------------------

@dataclass(frozen=True)
class CountResult:
    X: int
    lambda_weighted: float
    unit_count: int
    prime_only_count: int

    def to_json(self) -> dict:
        return {
            "X": self.X,
            "lambda_weighted": self.lambda_weighted,
            "unit_count": self.unit_count,
            "prime_only_count": self.prime_only_count,
        }


def _solve_last(a: int, b: int, c: int, lo: int, hi: int):
    """Integer roots of a x^2 + b x + c = 0 in [lo, hi]; None means every x."""
    if a:
        disc = b * b - 4 * a * c
        if disc < 0:
            return ()
        s = math.isqrt(disc)
        if s * s != disc:
            return ()
        roots = set()
        for num in (-b + s, -b - s):
            if num % (2 * a) == 0:
                roots.add(num // (2 * a))
        return tuple(sorted(x for x in roots if lo <= x <= hi))
    if b:
        if c % b == 0 and lo <= -c // b <= hi:
            return (-c // b,)
        return ()
    return None if c == 0 else ()


def count_solutions(inst: ProblemInstance, X: int, budget: int | None = None) -> CountResult:
    """Solutions of x^T A x = t with every x_i a prime power <= X.

    All coordinates but one are enumerated; the last (one with a nonzero
    diagonal entry when possible) is solved exactly with an integer square
    root, or linearly when its diagonal entry vanishes.
    """
    if X < 2:
        raise ValueError("X must be >= 2")
    A, t, n = inst.A.entries, inst.t, inst.n
    lam = von_mangoldt_table(X)
    pps = lam.prime_powers()
    check_budget(len(pps) ** (n - 1), budget, "count_solutions")
    last = max((i for i in range(n) if A[i][i]), default=n - 1)
    order = [i for i in range(n) if i != last]
    a = A[last][last]
    logs = {k: math.log(lam.entries[k][0]) for k in pps}
    is_pp = {k: lam.entries[k][1] == 1 for k in pps}

    unit = prime = 0
    weighted = 0.0
    # prefix state: quadratic part, linear coefficient of x_last, Lambda product, all-prime flag
    def rec(depth, xs, quad, lin, w, allp):
        nonlocal unit, prime, weighted
        if depth == len(order):
            roots = _solve_last(a, lin, quad - t, 2, X)
            if roots is None:
                roots = pps
            for x in roots:
                if x in logs:
                    unit += 1
                    weighted += w * logs[x]
                    if allp and is_pp[x]:
                        prime += 1
            return
        i = order[depth]
        row = A[i]
        for x in pps:
            dq = row[i] * x * x + 2 * x * sum(row[order[d]] * xs[d] for d in range(depth))
            rec(depth + 1, xs + (x,), quad + dq, lin + 2 * row[last] * x, w * logs[x], allp and is_pp[x])

    rec(0, (), 0, 0, 1.0, True)
    return CountResult(X, weighted, unit, prime)


def count_solutions_naive(inst: ProblemInstance, X: int, budget: int | None = None) -> CountResult:
    """Full enumeration over all prime-power tuples (test oracle)."""
    lam = von_mangoldt_table(X)
    pps = lam.prime_powers()
    check_budget(len(pps) ** inst.n, budget, "count_solutions_naive")
    unit = prime = 0
    weighted = 0.0
    for x in product(pps, repeat=inst.n):
        if inst.A.quad(x) == inst.t:
            unit += 1
            w = 1.0
            for v in x:
                w *= lam(v)
            weighted += w
            prime += all(lam.entries[v][1] == 1 for v in x)
    return CountResult(X, weighted, unit, prime)


# --- bilinear and paired systems -------------------------------------------

def _as_rational_matrix(M) -> RationalMatrix:
    if isinstance(M, RationalMatrix):
        return M
    if isinstance(M, SymmetricIntMatrix):
        return M.to_rational()
    return RationalMatrix.from_rows([[as_rational(v) for v in r] for r in M])


def _integer_scaled(M: RationalMatrix) -> list:
    """M times the lcm of its denominators (same zero set for homogeneous equations)."""
    rows = M.to_rows()
    lam = math.lcm(1, *(v.denominator for r in rows for v in r))
    return [[int(v * lam) for v in r] for r in rows]


def _integer_columns(M: RationalMatrix) -> list:
    """Each column scaled by its own denominator lcm."""
    rows = M.to_rows()
    if not rows:
        return rows
    cols = list(zip(*rows))
    scaled = []
    for c in cols:
        lam = math.lcm(1, *(v.denominator for v in c))
        scaled.append([int(v * lam) for v in c])
    return [list(r) for r in zip(*scaled)] if scaled else [[] for _ in rows]


def _interval(a: int, b: int, box: Box):
    """Integers s with a + b s in box (b != 0), as (lo, hi)."""
    if b > 0:
        return -((a - box.lo) // b), (box.hi - a) // b
    return -((box.hi - a) // -b), (a - box.lo) // -b


def _count_affine(w: tuple, c: int, box: Box) -> int:
    """#{y in box^k : w . y = c}."""
    w = list(w)
    zeros = sum(1 for v in w if v == 0)
    w = [v for v in w if v]
    free = len(box) ** zeros
    if not w:
        return free if c == 0 else 0
    if len(w) == 1:
        return free if c % w[0] == 0 and (c // w[0]) in box else 0
    if len(w) == 2:
        w0, w1 = w
        g, u, v = _ext_gcd(w0, w1)
        if c % g:
            return 0
        y0, y1 = u * (c // g), v * (c // g)
        s0 = _interval(y0, w1 // g, box)
        s1 = _interval(y1, -(w0 // g), box)
        lo, hi = max(s0[0], s1[0]), min(s0[1], s1[1])
        return free * max(0, hi - lo + 1)
    head, tail = w[0], tuple(w[1:])
    return free * sum(_count_affine(tail, c - head * y, box) for y in box.values())


def _ext_gcd(a: int, b: int):
    """(g, u, v) with a u + b v = g = gcd(a, b) > 0."""
    old_r, r, old_s, s, old_t, t = a, b, 1, 0, 0, 1
    while r:
        qt = old_r // r
        old_r, r = r, old_r - qt * r
        old_s, s = s, old_s - qt * s
        old_t, t = t, old_t - qt * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


@lru_cache(maxsize=1 << 16)
def _count_hyperplane(w: tuple, box: Box) -> int:
    return _count_affine(w, 0, box)


def _hyperplane_key(w, box: Box) -> tuple:
    g = 0
    for v in w:
        g = math.gcd(g, v)
    if g == 0:
        return tuple(w)
    w = [v // g for v in w]
    if box.lo == -box.hi:  # symmetric boxes allow sign flips per coordinate
        return tuple(sorted(abs(v) for v in w))
    if next(v for v in w if v) < 0:
        w = [-v for v in w]
    return tuple(sorted(w))


def _solve_linear_last(H: list, prefix, box: Box):
    """Values of the last coordinate with x^T H = 0 given the prefix; None = all."""
    n = len(H)
    m = len(H[0]) if H else 0
    if m == 0:
        return None
    s = [sum(prefix[i] * H[i][j] for i in range(n - 1)) for j in range(m)]
    last = H[n - 1]
    pivot = next((j for j in range(m) if last[j]), None)
    if pivot is None:
        return None if all(v == 0 for v in s) else ()
    if s[pivot] % last[pivot]:
        return ()
    x = -s[pivot] // last[pivot]
    if x not in box or any(s[j] + x * last[j] for j in range(m)):
        return ()
    return (x,)


def _vectors_with_H(n: int, H: list, box: Box, budget, what):
    check_budget(len(box) ** max(n - 1, 0), budget, what)
    for prefix in product(box.values(), repeat=n - 1):
        lasts = _solve_linear_last(H, prefix, box)
        if lasts is None:
            lasts = box.values()
        for x in lasts:
            yield prefix + (x,)


def count_bilinear(C, H=None, X: int = 1, box=None, budget: int | None = None) -> int:
    """#{(x, y) in box^n x box^k : x^T C y = 0 and x^T H = 0}.

    C is n x k rational, H is n x m rational (m may be 0). The box defaults
    to [1, X]; ``box="symmetric"`` gives [-X, X].
    """
    C = _as_rational_matrix(C)
    n, k = C.rows, C.cols
    Hm = _integer_columns(_as_rational_matrix(H)) if H is not None else [[] for _ in range(n)]
    if len(Hm) != n:
        raise DimensionMismatch(f"H has {len(Hm)} rows, C has {n}")
    box = _box(X, box)
    Ci = _integer_scaled(C)
    total = 0
    for x in _vectors_with_H(n, Hm, box, budget, "count_bilinear"):
        w = [sum(x[i] * Ci[i][j] for i in range(n)) for j in range(k)]
        total += _count_hyperplane(_hyperplane_key(w, box), box)
    return total


def count_bilinear_naive(C, H=None, X: int = 1, box=None) -> int:
    """Full enumeration over (x, y) (test oracle)."""
    C = _as_rational_matrix(C)
    n, k = C.rows, C.cols
    Hr = _as_rational_matrix(H).to_rows() if H is not None else [[] for _ in range(n)]
    box = _box(X, box)
    rows = C.to_rows()
    total = 0
    for x in product(box.values(), repeat=n):
        if any(sum(x[i] * Hr[i][j] for i in range(n)) for j in range(len(Hr[0]) if Hr and Hr[0] else 0)):
            continue
        w = [sum(x[i] * rows[i][j] for i in range(n)) for j in range(k)]
        total += sum(1 for y in product(box.values(), repeat=k) if sum(a * b for a, b in zip(w, y)) == 0)
    return total


def count_paired_system(C, H=None, X: int = 1, weighted: bool = False,
                        box=None, budget: int | None = None) -> float:
    """Pairs (x, y) with x^T C x = y^T C y and x^T H = y^T H.

    Grouping by the key (x^T C x, x^T H) turns the pair count into a sum of
    squared class sizes. In weighted mode only prime-power coordinates
    contribute, with weight Lambda(x_1)...Lambda(x_n).
    """
    C = _as_rational_matrix(C)
    n = C.rows
    if C.cols != n:
        raise DimensionMismatch("C must be square")
    Hm = _integer_columns(_as_rational_matrix(H)) if H is not None else [[] for _ in range(n)]
    if len(Hm) != n:
        raise DimensionMismatch(f"H has {len(Hm)} rows, C has {n}")
    box = _box(X, box)
    Ci = _integer_scaled(C)
    m = len(Hm[0]) if Hm else 0
    if weighted:
        lam = von_mangoldt_table(max(box.hi, 1))
        coords = [v for v in box.values() if v >= 2 and lam.entries[v] is not None]
        logw = {v: lam(v) for v in coords}
    else:
        coords = list(box.values())
    check_budget(len(coords) ** n, budget, "count_paired_system")
    classes = defaultdict(float) if weighted else defaultdict(int)
    for x in product(coords, repeat=n):
        q = sum(x[i] * Ci[i][j] * x[j] for i in range(n) for j in range(n))
        key = (q,) + tuple(sum(x[i] * Hm[i][j] for i in range(n)) for j in range(m))
        if weighted:
            w = 1.0
            for v in x:
                w *= logw[v]
            classes[key] += w
        else:
            classes[key] += 1
    if weighted:
        return math.fsum(v * v for v in classes.values())
    return sum(v * v for v in classes.values())


@dataclass(frozen=True)
class InjectionReport:
    lhs: int
    rhs: int
    holds: bool

    def to_json(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "holds": self.holds}


def verify_injection(C, H=None, X: int = 1, budget: int | None = None) -> InjectionReport:
    """Compare the paired count on [1, X] with #{(u, v) in [-2X, 2X]^2n : u^T C v = 0, v^T H = 0}.

    (x, y) -> (x + y, x - y) is injective and u^T C v = x^T C x - y^T C y
    for symmetric C, so lhs <= rhs must hold exactly.
    """
    C = _as_rational_matrix(C)
    if C.to_rows() != C.T.to_rows():
        raise DimensionMismatch("C must be symmetric")
    lhs = count_paired_system(C, H, X, budget=budget)
    # v carries the H constraint, so it plays the role of x in count_bilinear
    rhs = count_bilinear(C.T, H, box=Box.symmetric(2 * X), budget=budget)
    return InjectionReport(lhs, rhs, lhs <= rhs)


# --- growth fits --------------------------------------------------------------

@dataclass(frozen=True)
class GrowthFit:
    samples: tuple
    slope: float
    predicted_exponent: float

    @property
    def deviation(self) -> float:
        return abs(self.slope - self.predicted_exponent)

    def to_json(self) -> dict:
        return {
            "samples": [{"X": X, "count": c} for X, c in self.samples],
            "slope": self.slope,
            "predicted_exponent": self.predicted_exponent,
            "deviation": self.deviation,
        }


def growth_exponent_fit(counts, predicted: float) -> GrowthFit:
    """Least-squares slope of log count against log X."""
    samples = tuple((int(X), c) for X, c in counts)
    if len(samples) < 3:
        raise DegenerateSamples("need at least 3 samples")
    Xs = [X for X, _ in samples]
    if any(b <= a for a, b in zip(Xs, Xs[1:])):
        raise DegenerateSamples("X values must be strictly increasing")
    if any(c <= 0 for _, c in samples):
        raise DegenerateSamples("counts must be positive")
    lx = np.log(np.array(Xs, dtype=float))
    ly = np.log(np.array([float(c) for _, c in samples]))
    slope = float(np.polyfit(lx, ly, 1)[0])
    return GrowthFit(samples, slope, float(predicted))
