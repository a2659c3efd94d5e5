"""Circle-method experiments on the exact spectrum of x^T A x.

S(alpha) is a finite trigonometric polynomial sum_m r(m) e(alpha m), so its
integral against e(-alpha t) over any interval has a closed form. Arc
integrals below use that closed form, never quadrature.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from .errors import PTooLarge, SplitUnavailable
from .local import ProblemInstance, check_budget, singular_series_truncated, von_mangoldt_table

TWO_PI = 2.0 * math.pi


# --- histograms --------------------------------------------------------------

@dataclass(frozen=True)
class RepresentationHistogram:
    """r(m) for the values m of x^T A x, x ranging over prime-power tuples <= X."""

    X: int
    weights: str
    ms: np.ndarray  # sorted distinct values
    r: np.ndarray  # matching weights (int64 for unit, float64 for lambda)

    @property
    def m_min(self) -> int:
        return int(self.ms[0]) if len(self.ms) else 0

    @property
    def m_max(self) -> int:
        return int(self.ms[-1]) if len(self.ms) else 0

    def __call__(self, m: int):
        i = np.searchsorted(self.ms, m)
        if i < len(self.ms) and self.ms[i] == m:
            return self.r[i].item()
        return 0 if self.weights == "unit" else 0.0

    def total_mass(self) -> float:
        return float(self.r.sum())

    def as_dict(self) -> dict:
        return {int(m): v.item() for m, v in zip(self.ms, self.r)}


def _coords(X: int, weights: str):
    lam = von_mangoldt_table(X)
    pps = lam.prime_powers()
    w = np.array([lam(k) for k in pps]) if weights == "lambda" else np.ones(len(pps), dtype=np.int64)
    return np.array(pps, dtype=np.int64), w


def _histogram_direct(A, idx, X, weights, budget):
    """(values, weights) arrays for the subform of A on coordinates idx."""
    pps, w = _coords(X, weights)
    n = len(idx)
    check_budget(len(pps) ** n, budget, "representation_histogram")
    sub = [[A[i][j] for j in idx] for i in idx]
    inner = min(n, 3)
    lead = n - inner
    grids = np.meshgrid(*([pps] * inner), indexing="ij")
    H = np.stack([g.ravel() for g in grids], axis=1)
    Win = np.ones(len(H), dtype=w.dtype)
    for g in np.meshgrid(*([w] * inner), indexing="ij"):
        Win = Win * g.ravel()
    Ain = np.array([r[lead:] for r in sub[lead:]], dtype=np.int64)
    Qin = np.einsum("ki,ij,kj->k", H, Ain, H)
    parts = []
    for pre in product(range(len(pps)), repeat=lead):
        xs = [int(pps[k]) for k in pre]
        qp = sum(sub[i][j] * xs[i] * xs[j] for i in range(lead) for j in range(lead))
        lin = np.array([2 * sum(sub[i][lead + j] * xs[i] for i in range(lead)) for j in range(inner)],
                       dtype=np.int64)
        wp = w[list(pre)].prod() if lead else 1
        parts.append(_group(Qin + H @ lin + qp, Win * wp))
    return _merge(parts)


def _group(vals, wts):
    """Distinct values with summed weights (int weights stay exact)."""
    u, inv = np.unique(vals, return_inverse=True)
    sums = np.zeros(len(u), dtype=wts.dtype)
    np.add.at(sums, inv.ravel(), wts)
    return u, sums


def _merge(parts):
    if len(parts) == 1:
        return parts[0]
    return _group(np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))


def _components(A) -> list:
    n = len(A)
    seen, comps = set(), []
    for s in range(n):
        if s in seen:
            continue
        stack, comp = [s], []
        seen.add(s)
        while stack:
            i = stack.pop()
            comp.append(i)
            for j in range(n):
                if j not in seen and A[i][j]:
                    seen.add(j)
                    stack.append(j)
        comps.append(sorted(comp))
    return comps


def _convolve(h1, h2):
    """Histogram of m1 + m2 (the join of two independent blocks), in chunks of h1."""
    ms1, r1 = h1
    ms2, r2 = h2
    parts = []
    step = max(1, (1 << 20) // max(1, len(ms2)))
    for s in range(0, len(ms1), step):
        a, ra = ms1[s:s + step], r1[s:s + step]
        vals = (a[:, None] + ms2[None, :]).ravel()
        wts = (ra[:, None] * r2[None, :]).ravel()
        parts.append(_group(vals, wts))
    return _merge(parts)


def representation_histogram(inst: ProblemInstance, X: int, weights: str = "unit",
                             mode: str = "direct", budget: int | None = None) -> RepresentationHistogram:
    """Exact histogram of x^T A x over prime-power tuples in [2, X]^n.

    ``mode="split"`` requires A to be block diagonal (after relabelling) and
    combines the block histograms by a hash join, which is what makes n up
    to 6 feasible; it raises SplitUnavailable if A has a single block.
    """
    if weights not in ("unit", "lambda"):
        raise ValueError("weights must be 'unit' or 'lambda'")
    A = inst.A.entries
    n = inst.n
    if mode == "direct":
        ms, r = _histogram_direct(A, list(range(n)), X, weights, budget)
    elif mode == "split":
        comps = _components(A)
        if len(comps) < 2:
            raise SplitUnavailable("the form has cross terms linking every coordinate")
        comps.sort(key=len, reverse=True)
        halves = [[], []]
        for c in comps:
            min(halves, key=len).extend(c)
        parts = [_histogram_direct(A, sorted(h), X, weights, budget) for h in halves]
        ms, r = _convolve(parts[0], parts[1])
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return RepresentationHistogram(X, weights, ms, r)


def representation_histogram_naive(inst: ProblemInstance, X: int, weights: str = "unit") -> dict:
    lam = von_mangoldt_table(X)
    out = {}
    for x in product(lam.prime_powers(), repeat=inst.n):
        m = inst.A.quad(x)
        w = 1
        if weights == "lambda":
            w = 1.0
            for v in x:
                w *= lam(v)
        out[m] = out.get(m, 0) + w
    return out


def _phase(alpha: float, ms: np.ndarray) -> np.ndarray:
    """e(alpha m), reducing alpha m mod 1 before exponentiating."""
    x = np.mod(alpha * ms.astype(np.float64), 1.0)
    return np.exp(1j * TWO_PI * x)


def s_alpha(hist: RepresentationHistogram, alpha: float) -> complex:
    """S(alpha) = sum_m r(m) e(alpha m)."""
    if isinstance(alpha, Fraction):
        num, den = alpha.numerator, alpha.denominator
        ph = np.exp(1j * TWO_PI * ((num * hist.ms) % den) / den)
    else:
        ph = _phase(float(alpha), hist.ms)
    return complex((hist.r * ph).sum())


def s_alpha_direct(inst: ProblemInstance, X: int, alpha: float, weights: str = "unit") -> complex:
    """Defining n-fold sum (test oracle)."""
    lam = von_mangoldt_table(X)
    total = 0j
    for x in product(lam.prime_powers(), repeat=inst.n):
        w = 1.0
        if weights == "lambda":
            for v in x:
                w *= lam(v)
        m = inst.A.quad(x)
        total += w * complex(math.cos(TWO_PI * ((alpha * m) % 1.0)), math.sin(TWO_PI * ((alpha * m) % 1.0)))
    return total


# --- arcs ----------------------------------------------------------------------

@dataclass(frozen=True)
class Arc:
    a: int
    q: int
    center: Fraction
    halfwidth: Fraction

    @property
    def lo(self) -> Fraction:
        return self.center - self.halfwidth

    @property
    def hi(self) -> Fraction:
        return self.center + self.halfwidth


@dataclass(frozen=True)
class ArcFamily:
    X: int
    K: float | None
    P: Fraction | None
    intervals: tuple

    @classmethod
    def full_cover(cls, X: int) -> "ArcFamily":
        """A single interval equal to [1/X, 1 + 1/X]."""
        arc = Arc(1, 1, Fraction(1, 2) + 1 / Fraction(X), Fraction(1, 2))
        return cls(X, None, None, (arc,))

    def total_measure(self) -> Fraction:
        return sum((2 * a.halfwidth for a in self.intervals), Fraction(0))

    def is_disjoint(self) -> bool:
        arcs = sorted(self.intervals, key=lambda a: a.lo)
        return all(x.hi < y.lo for x, y in zip(arcs, arcs[1:]))

    def contains(self, alpha: float) -> bool:
        return _contains(self, alpha)

    def gaps(self) -> list:
        """Complement of the arcs inside [1/X, 1 + 1/X], as Fraction pairs."""
        lo = 1 / Fraction(self.X)
        hi = 1 + lo
        out = []
        cur = lo
        for a in sorted(self.intervals, key=lambda a: a.lo):
            if a.lo > cur:
                out.append((cur, min(a.lo, hi)))
            cur = max(cur, a.hi)
        if cur < hi:
            out.append((cur, hi))
        return out


def major_arc_parameter(X: int, K: float) -> Fraction:
    return Fraction(math.log(X) ** K)


def build_arcs(X, K: float) -> ArcFamily:
    """Arcs |alpha - a/q| <= P/(q X^2) for q <= P = (log X)^K, 1 <= a <= q, gcd(a, q) = 1.

    X may be any real bound >= 2 (e.g. math.exp(10), for which P = 10).
    The a/q = 1/1 arc is centred at 1 (the circle is taken as [1/X, 1 + 1/X]).
    q runs up to floor(P) with a 1e-9 allowance so that P = 10.000000000000002
    and P = 9.999999999999998 both give q <= 10.
    """
    P = major_arc_parameter(X, K)
    if P > Fraction(X) / 2:
        raise PTooLarge(f"P = {float(P):.6g} exceeds X/2 = {X / 2}")
    qmax = math.floor(float(P) + 1e-9)
    X2 = Fraction(X) ** 2
    arcs = []
    for q in range(1, qmax + 1):
        w = P / (q * X2)
        for a in range(1, q + 1):
            if math.gcd(a, q) == 1:
                arcs.append(Arc(a, q, Fraction(a, q), w))
    return ArcFamily(X, K, P, tuple(arcs))


def _contains(fam: ArcFamily, alpha: float) -> bool:
    key = "_sorted"
    cache = fam.__dict__.get(key)
    if cache is None:
        arcs = sorted(fam.intervals, key=lambda a: a.lo)
        cache = ([float(a.lo) for a in arcs], [float(a.hi) for a in arcs])
        object.__setattr__(fam, key, cache)
    los, his = cache
    i = bisect.bisect_right(los, alpha) - 1
    return i >= 0 and alpha <= his[i]


def _interval_integral(hist, t: int, lo: float, hi: float) -> complex:
    """int_lo^hi S(alpha) e(-alpha t) d alpha for float endpoints."""
    k = hist.ms - t
    r = hist.r.astype(np.float64)
    nz = k != 0
    kk = k[nz].astype(np.float64)
    num = _phase(hi, k[nz]) - _phase(lo, k[nz])
    val = (r[nz] * num / (2j * math.pi * kk)).sum()
    return complex(val) + float(r[~nz].sum()) * (hi - lo)


def _arc_integral(hist, t: int, arc: Arc) -> complex:
    """Closed form over [c - w, c + w]: sum_m r(m) e(k c) sin(2 pi k w)/(pi k), k = m - t."""
    k = hist.ms - t
    r = hist.r.astype(np.float64)
    nz = k != 0
    kk = k[nz]
    ec = np.exp(1j * TWO_PI * ((arc.a * kk) % arc.q) / arc.q)
    w = float(arc.halfwidth)
    kf = kk.astype(np.float64)
    val = (r[nz] * ec * np.sin(TWO_PI * kf * w) / (math.pi * kf)).sum()
    return complex(val) + float(r[~nz].sum()) * 2 * w


@dataclass
class MajorArcReport:
    I_major: complex
    I_minor: complex
    I_total: float
    major_share: float | None
    predicted_main: float | None
    per_q: list = field(default_factory=list)

    @property
    def completeness_error(self) -> float:
        return abs(self.I_major + self.I_minor - self.I_total)

    def to_json(self) -> dict:
        cj = lambda z: {"re": z.real, "im": z.imag}  # noqa: E731
        return {
            "I_major": cj(self.I_major),
            "I_minor": cj(self.I_minor),
            "I_total": self.I_total,
            "major_share": self.major_share,
            "predicted_main": self.predicted_main,
            "completeness_error": self.completeness_error,
        }

    def per_q_csv_rows(self) -> list:
        return [("q", "arcs", "re", "im")] + [
            (q, cnt, z.real, z.imag) for q, cnt, z in self.per_q
        ]


def major_arc_integral(hist: RepresentationHistogram, t: int, arcs: ArcFamily,
                       inst: ProblemInstance | None = None, primes=(2, 3, 5, 7)) -> MajorArcReport:
    """Integrate S(alpha) e(-alpha t) over the arcs and over their complement.

    I_minor is integrated over the gaps on its own, so I_major + I_minor = r(t)
    is a genuine check rather than a definition. If ``inst`` is given,
    predicted_main is the truncated singular series (q <= P) times X^(n-2).
    """
    if hist.X != arcs.X:
        raise ValueError("histogram and arcs must share X")
    per_q = {}
    I_major = 0j
    for arc in arcs.intervals:
        v = _arc_integral(hist, t, arc)
        I_major += v
        cnt, acc = per_q.get(arc.q, (0, 0j))
        per_q[arc.q] = (cnt + 1, acc + v)
    I_minor = 0j
    for lo, hi in arcs.gaps():
        I_minor += _interval_integral(hist, t, float(lo), float(hi))
    total = float(hist(t))
    share = I_major.real / total if total > 0 else None
    predicted = None
    if inst is not None:
        Q = max(1, math.floor(float(arcs.P) + 1e-9)) if arcs.P is not None else 1
        ss = singular_series_truncated(inst, Q, primes)
        predicted = float(ss.partial_sum.real * float(hist.X) ** (inst.n - 2))
    rows = [(q, c, z) for q, (c, z) in sorted(per_q.items())]
    return MajorArcReport(I_major, I_minor, total, share, predicted, rows)


# --- Weyl sums -------------------------------------------------------------------

def weyl_probe(d, beta: float, X: int, alpha) -> complex:
    """sum_{x <= X} Lambda(x) e(alpha d x^2 + beta x)."""
    return complex(_weyl_many(Fraction(d), float(beta), X, np.array([float(alpha)]))[0])


def _weyl_many(d: Fraction, beta: float, X: int, alphas: np.ndarray, chunk: int = 256) -> np.ndarray:
    lam = von_mangoldt_table(X)
    xs = np.array(lam.prime_powers(), dtype=np.int64)
    w = np.array([lam(int(x)) for x in xs])
    # alpha d x^2 mod 1 with d x^2 = (num x^2)/den kept exact
    num = (d.numerator * xs * xs) % d.denominator if d.denominator > 1 else None
    base = (d.numerator * xs * xs) // d.denominator if d.denominator > 1 else d.numerator * xs * xs
    out = np.empty(len(alphas), dtype=complex)
    lin = np.mod(beta * xs, 1.0)
    for s in range(0, len(alphas), chunk):
        a = alphas[s:s + chunk, None]
        ph = np.mod(a * base.astype(np.float64), 1.0)
        if num is not None:
            ph = ph + a * (num / d.denominator)
        out[s:s + chunk] = (w * np.exp(1j * TWO_PI * (ph + lin))).sum(axis=1)
    return out


@dataclass
class MinorArcScan:
    X: int
    sup_abs: float
    argmax_alpha: float | None
    psi: float
    n_points: int
    empty: bool
    alphas: np.ndarray
    values: np.ndarray

    @property
    def ratio(self) -> float:
        return self.sup_abs / self.X

    def to_json(self) -> dict:
        return {
            "X": self.X,
            "sup_abs": self.sup_abs,
            "argmax_alpha": self.argmax_alpha,
            "psi": self.psi,
            "n_points": self.n_points,
            "empty_scan": self.empty,
            "ratio": self.ratio,
        }


def minor_arc_scan(d, X: int, grid_size: int, K: float = 1.0, beta: float = 0.0,
                   arcs: ArcFamily | None = None) -> MinorArcScan:
    """max |weyl_probe| over a uniform grid of [1/X, 1 + 1/X] minus the major arcs.

    ``arcs`` replaces the family built from (X, K); if it swallows every grid
    point the scan is returned with ``empty=True``.
    """
    if grid_size < 10:
        raise ValueError("grid_size must be >= 10")
    fam = arcs if arcs is not None else build_arcs(X, K)
    grid = 1.0 / X + np.arange(grid_size) / grid_size
    keep = np.array([not _contains(fam, float(a)) for a in grid], dtype=bool)
    alphas = grid[keep]
    psi = von_mangoldt_table(X).psi()
    if len(alphas) == 0:
        return MinorArcScan(X, 0.0, None, psi, 0, True, alphas, np.array([]))
    vals = np.abs(_weyl_many(Fraction(d), beta, X, alphas))
    i = int(np.argmax(vals))
    return MinorArcScan(X, float(vals[i]), float(alphas[i]), psi, len(alphas), False, alphas, vals)
