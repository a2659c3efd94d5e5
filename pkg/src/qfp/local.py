"""Prime-power arithmetic: von Mangoldt weights, Gauss sums over units,
the truncated singular series and local densities.

Everything modular is done on the histogram of h^T A h mod q over
h in ((Z/q)^x)^n. The histogram is exact integer data; complex phases only
enter at the last step, through a table whose entries satisfy
e((q - r)/q) = conj(e(r/q)) bit for bit.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

from .errors import BudgetExceeded, ModulusTooLarge, NotCoprime
from .linalg import SymmetricIntMatrix

DEFAULT_BUDGET = 10**9


def default_budget() -> int:
    """Enumeration cap; the QFP_BUDGET environment variable overrides it."""
    raw = os.environ.get("QFP_BUDGET")
    return int(raw) if raw else DEFAULT_BUDGET


# --- elementary number theory ----------------------------------------------

def factorize(q: int) -> list:
    """[(p, e), ...] with p ascending."""
    out = []
    p = 2
    while p * p <= q:
        if q % p == 0:
            e = 0
            while q % p == 0:
                q //= p
                e += 1
            out.append((p, e))
        p += 1 if p == 2 else 2
    if q > 1:
        out.append((q, 1))
    return out


def is_prime(p: int) -> bool:
    return p >= 2 and factorize(p) == [(p, 1)]


def euler_phi(q: int) -> int:
    r = q
    for p, _ in factorize(q):
        r = r // p * (p - 1)
    return r


def units(q: int) -> list:
    if q == 1:
        return [0]
    return [u for u in range(1, q) if math.gcd(u, q) == 1]


def valuation(n: int, p: int) -> int:
    if n == 0:
        return math.inf
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


# --- von Mangoldt ------------------------------------------------------------

@dataclass(frozen=True)
class VonMangoldtTable:
    """entries[k] is None or (p, e) with k = p**e, for 0 <= k <= X (k = 0 unused)."""

    X: int
    entries: tuple

    def __call__(self, k: int) -> float:
        e = self.entries[k]
        return 0.0 if e is None else math.log(e[0])

    def prime_powers(self) -> list:
        return [k for k in range(2, self.X + 1) if self.entries[k] is not None]

    def weights(self) -> np.ndarray:
        """Array of Lambda(k) for k = 0..X."""
        return np.array([self(k) for k in range(self.X + 1)])

    def psi(self) -> float:
        return math.fsum(self(k) for k in range(2, self.X + 1))


@lru_cache(maxsize=32)
def von_mangoldt_table(X: int) -> VonMangoldtTable:
    if X < 1:
        raise ValueError("X must be >= 1")
    spf = list(range(X + 1))
    for p in range(2, math.isqrt(X) + 1):
        if spf[p] == p:
            for m in range(p * p, X + 1, p):
                if spf[m] == m:
                    spf[m] = p
    entries = [None, None]
    for k in range(2, X + 1):
        p = spf[k]
        m, e = k, 0
        while m % p == 0:
            m //= p
            e += 1
        entries.append((p, e) if m == 1 else None)
    return VonMangoldtTable(X, tuple(entries[: X + 1]))


# --- residue histograms and Gauss sums ---------------------------------------

@dataclass(frozen=True)
class ProblemInstance:
    A: SymmetricIntMatrix
    t: int

    @property
    def n(self) -> int:
        return self.A.n


@dataclass(frozen=True)
class GaussSumValue:
    q: int
    a: int
    value: complex

    def to_json(self) -> dict:
        return {"q": self.q, "a": self.a, "value": {"re": self.value.real, "im": self.value.imag}}


def _check_budget(q: int, n: int, budget: int | None):
    budget = default_budget() if budget is None else budget
    cost = euler_phi(q) ** n
    if cost > budget:
        raise ModulusTooLarge(f"enumerating ((Z/{q})^x)^{n} needs {cost} iterations, budget is {budget}")


@lru_cache(maxsize=512)
def _residue_counts(entries: tuple, q: int) -> np.ndarray:
    n = len(entries)
    u = np.array(units(q), dtype=np.int64)
    counts = np.zeros(q, dtype=np.int64)
    if n == 0:
        counts[0] = 1
        return counts
    # vectorize over trailing coordinates, loop over the leading prefix
    inner = 1
    while inner < n and len(u) ** (inner + 1) <= 1 << 20:
        inner += 1
    lead = n - inner
    grids = np.meshgrid(*([u] * inner), indexing="ij")
    H = np.stack([g.ravel() for g in grids], axis=1)  # (phi^inner, inner)
    Ain = np.array([[entries[lead + i][lead + j] for j in range(inner)] for i in range(inner)], dtype=np.int64) % q
    Qin = np.einsum("ki,ij,kj->k", H, Ain, H) % q
    for pre in product(u.tolist(), repeat=lead):
        qp = 0
        w = np.zeros(inner, dtype=np.int64)
        for i in range(lead):
            for j in range(lead):
                qp += entries[i][j] * pre[i] * pre[j]
            for j in range(inner):
                w[j] += 2 * entries[i][lead + j] * pre[i]
        vals = (Qin + (H @ (w % q)) + qp % q) % q
        counts += np.bincount(vals, minlength=q)
    return counts


def residue_counts(A: SymmetricIntMatrix, q: int, budget: int | None = None) -> np.ndarray:
    """counts[r] = #{h in ((Z/q)^x)^n : h^T A h = r mod q}."""
    _check_budget(q, A.n, budget)
    return _residue_counts(A.entries, q)


def congruence_count(A: SymmetricIntMatrix, t: int, q: int, budget: int | None = None) -> int:
    """N_q(t): unit solutions of h^T A h = t mod q."""
    return int(residue_counts(A, q, budget)[t % q])


@lru_cache(maxsize=512)
def phase_table(q: int) -> np.ndarray:
    """e(r/q) for r in [0, q), with exact conjugate symmetry."""
    r = np.arange(q)
    tab = np.exp(2j * np.pi * r / q)
    tab[0] = 1.0
    half = (q - 1) // 2
    tab[q - half:] = np.conj(tab[1:half + 1][::-1])
    if q % 2 == 0:
        tab[q // 2] = -1.0
    return tab


def _gauss_direct(A: SymmetricIntMatrix, q: int, a: int, budget) -> complex:
    counts = residue_counts(A, q, budget)
    idx = (a * np.arange(q)) % q
    return complex((counts * phase_table(q)[idx]).sum())


def gauss_sum(A: SymmetricIntMatrix, q: int, a: int, method: str = "crt", budget: int | None = None) -> complex:
    """C(q, a) = sum over unit vectors h mod q of e(a h^T A h / q).

    ``method="crt"`` splits q into prime powers with
    C(q1 q2, a) = C(q1, a q2 mod q1) C(q2, a q1 mod q2); ``"direct"`` sums
    over all of ((Z/q)^x)^n.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    if math.gcd(a, q) != 1:
        raise NotCoprime(f"gcd({a}, {q}) != 1")
    if method == "direct" or q == 1:
        return _gauss_direct(A, q, a % q, budget)
    if method != "crt":
        raise ValueError(f"unknown method {method!r}")
    value = complex(1.0)
    for p, e in factorize(q):
        qi = p**e
        rest = q // qi
        value *= _gauss_direct(A, qi, (a * rest) % qi, budget)
    return value


def gauss_sum_value(A, q, a, method="crt", budget=None) -> GaussSumValue:
    return GaussSumValue(q, a, gauss_sum(A, q, a, method, budget))


def term_T(inst: ProblemInstance, q: int, single_phi: bool = False,
           budget: int | None = None, gauss=None) -> complex:
    """T(q) = phi(q)^{-n} sum_{(a,q)=1} C(q, a) e(-a t / q).

    With ``single_phi`` the prefactor is 1/phi(q) instead.
    """
    gauss = gauss or gauss_sum
    ph = euler_phi(q)
    tab = phase_table(q)
    total = complex(0.0)
    for a in units(q):
        total += gauss(inst.A, q, a, budget=budget) * tab[(-a * inst.t) % q]
    norm = ph if single_phi else ph**inst.n
    return total / norm


def prime_power_partial_sum(inst: ProblemInstance, p: int, k: int, **kw) -> complex:
    """sum over q | p^k of T(q)."""
    return sum((term_T(inst, p**j, **kw) for j in range(k + 1)), complex(0.0))


def local_density(inst: ProblemInstance, p: int, k: int, budget: int | None = None) -> float:
    """delta_{p^k} = p^k phi(p^k)^{-n} N_{p^k}(t)."""
    if not is_prime(p) or k < 1:
        raise ValueError("need p prime and k >= 1")
    q = p**k
    N = congruence_count(inst.A, inst.t, q, budget)
    return q * N / euler_phi(q) ** inst.n


def _det(A: SymmetricIntMatrix) -> int:
    from .linalg import determinant

    return int(determinant(A.to_rows()))


def auto_kmax(A: SymmetricIntMatrix, p: int) -> int:
    """Exponent at which delta_{p^k} is taken as the Euler factor.

    p = 2 needs k = 3 to see odd squares (all = 1 mod 8); odd p needs
    1 + v_p(det A) to get past the primes dividing the determinant.
    """
    if p == 2:
        return 3
    det = _det(A)
    return 2 if det == 0 else 1 + valuation(det, p)


@dataclass
class SingularSeriesReport:
    Q: int
    terms: dict
    partial_sum: complex
    local_densities: dict
    product_estimate: float
    k_max: dict = field(default_factory=dict)
    single_phi: bool = False

    def to_json(self) -> dict:
        cj = lambda z: {"re": z.real, "im": z.imag}  # noqa: E731
        partial = []
        run = complex(0.0)
        for q in sorted(self.terms):
            run += self.terms[q]
            partial.append({"Q": q, "value": cj(run)})
        return {
            "Q": self.Q,
            "single_phi": self.single_phi,
            "terms": [{"q": q, "T": cj(self.terms[q])} for q in sorted(self.terms)],
            "partial_sums": partial,
            "partial_sum": cj(self.partial_sum),
            "local_densities": [
                {"p": p, "k": k, "delta": v} for (p, k), v in sorted(self.local_densities.items())
            ],
            "k_max": [{"p": p, "k": k} for p, k in sorted(self.k_max.items())],
            "product_estimate": self.product_estimate,
        }


def singular_series_truncated(inst: ProblemInstance, Q: int, primes=(2, 3, 5, 7),
                              k_max: int | dict | None = None, budget: int | None = None,
                              single_phi: bool = False) -> SingularSeriesReport:
    """T(q) for q <= Q, local densities for the given primes, and prod_p delta_{p^kmax}.

    k_max defaults per prime to ``auto_kmax`` and is lowered when the
    enumeration would exceed the budget; if even k = 1 does not fit,
    ModulusTooLarge propagates.
    """
    if Q < 1:
        raise ValueError("Q must be >= 1")
    budget = default_budget() if budget is None else budget
    terms = {}
    partial = complex(0.0)
    for q in range(1, Q + 1):
        terms[q] = term_T(inst, q, single_phi, budget)
        partial += terms[q]
    dens, kmaxes = {}, {}
    prod_est = 1.0
    for p in primes:
        if not is_prime(p):
            raise ValueError(f"{p} is not prime")
        if isinstance(k_max, dict):
            km = k_max.get(p, auto_kmax(inst.A, p))
        else:
            km = k_max if k_max is not None else auto_kmax(inst.A, p)
        while km > 1 and euler_phi(p**km) ** inst.n > budget:
            km -= 1
        for k in range(1, km + 1):
            dens[(p, k)] = local_density(inst, p, k, budget)
        kmaxes[p] = km
        prod_est *= dens[(p, km)]
    return SingularSeriesReport(Q, terms, partial, dens, prod_est, kmaxes, single_phi)


def check_budget(cost: int, budget: int | None, what: str):
    budget = default_budget() if budget is None else budget
    if cost > budget:
        raise BudgetExceeded(f"{what} needs {cost} iterations, budget is {budget}")
