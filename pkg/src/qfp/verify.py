"""End-to-end invariant suites behind ``qfp verify``.

Each suite is a small seeded experiment that returns pass/fail counts. A
failing check is recorded, never raised, so one run reports every problem.
"""

from __future__ import annotations

import cmath
import math
import random
import time
from dataclasses import dataclass, field
from itertools import product

from .errors import NoQuintuple, QfpError
from .linalg import (
    IndexPermutation,
    SymmetricIntMatrix,
    bareiss_rank,
    conjugate_by_permutation,
    rank_rational,
    solve_square,
)

MODULES = ("exact-linalg", "offdiag-rank", "structure-decomp", "arithmetic-local", "counting", "circle-arcs")


def random_symmetric(rng: random.Random, n: int, lo: int = -5, hi: int = 5, zero_prob: float = 0.0) -> SymmetricIntMatrix:
    rows = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            v = 0 if rng.random() < zero_prob else rng.randint(lo, hi)
            rows[i][j] = rows[j][i] = v
    return SymmetricIntMatrix.from_rows(rows)


def gauss_sum_oracle(A: SymmetricIntMatrix, q: int, a: int) -> complex:
    """Plain double loop over unit vectors, independent of the histogram code."""
    us = [u for u in range(q) if math.gcd(u, q) == 1] if q > 1 else [0]
    total = 0j
    for h in product(us, repeat=A.n):
        total += cmath.exp(2j * math.pi * ((a * A.quad(h)) % q) / q)
    return total


@dataclass
class SuiteResult:
    name: str
    module: str
    passed: int = 0
    failed: int = 0
    details: list = field(default_factory=list)
    seconds: float = 0.0

    def check(self, ok: bool, what: str):
        if ok:
            self.passed += 1
        else:
            self.failed += 1
            if len(self.details) < 20:
                self.details.append(what)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "module": self.module,
            "passed": self.passed,
            "failed": self.failed,
            "details": self.details,
        }


@dataclass
class VerifyReport:
    suites: list

    @property
    def overall(self) -> str:
        return "pass" if all(s.failed == 0 for s in self.suites) else "fail"

    @property
    def failing(self) -> list:
        return [s.name for s in self.suites if s.failed]

    def to_json(self) -> dict:
        return {"overall": self.overall, "failing": self.failing, "suites": [s.to_json() for s in self.suites]}


_SUITES = []


def suite(module: str, name: str):
    def deco(fn):
        _SUITES.append((module, name, fn))
        return fn
    return deco


def _rel_close(a, b, tol) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


# --- exact-linalg ---------------------------------------------------------------

@suite("exact-linalg", "rank-bareiss-vs-fraction")
def _linalg_rank(res, rng, ctx):
    for _ in range(60):
        r, c = rng.randint(1, 6), rng.randint(1, 6)
        rows = [[rng.randint(-4, 4) if rng.random() < 0.7 else 0 for _ in range(c)] for _ in range(r)]
        if rng.random() < 0.3 and r > 1:
            rows[-1] = [rows[0][j] * 2 - rows[1 % r][j] for j in range(c)]
        res.check(bareiss_rank(rows) == rank_rational(rows), f"rank mismatch {rows}")


@suite("exact-linalg", "permutation-and-solve")
def _linalg_perm(res, rng, ctx):
    for _ in range(40):
        n = rng.randint(1, 6)
        A = random_symmetric(rng, n)
        img = list(range(n))
        rng.shuffle(img)
        p = IndexPermutation(tuple(img))
        B = conjugate_by_permutation(A, p)
        res.check(conjugate_by_permutation(B, p.inverse()) == A, "permutation round trip")
        M = [[rng.randint(-5, 5) for _ in range(n)] for _ in range(n)]
        if rank_rational(M) == n:
            x = [rng.randint(-3, 3) for _ in range(n)]
            b = [sum(M[i][j] * x[j] for j in range(n)) for i in range(n)]
            res.check(solve_square(M, b) == x, f"solve {M} {b}")


# --- offdiag-rank -------------------------------------------------------------------

@suite("offdiag-rank", "offdiag-oracle-equivalence")
def _offdiag(res, rng, ctx):
    from .offdiag import offdiag_rank, offdiag_rank_oracle
    from .structure import random_form

    for i in range(60):
        n = rng.randint(2, 7)
        if i % 3 == 2 and n >= 4:
            A = random_form(rng.choice(["rank1", "case11", "case21", "case22"]), n, rng.randrange(10**9)).assemble()
        else:
            A = random_symmetric(rng, n, zero_prob=rng.choice([0.0, 0.5, 0.8]))
        res.check(offdiag_rank(A) == offdiag_rank_oracle(A), f"offdiag mismatch {A.to_rows()}")


# --- structure-decomp ---------------------------------------------------------------

@suite("structure-decomp", "structure-roundtrip")
def _structure(res, rng, ctx):
    from .offdiag import offdiag_rank
    from .structure import CASE11, CASE21, CASE22, decompose, random_form

    expect = {"rank1": None, "case11": CASE11, "case21": CASE21, "case22": CASE22}
    for kind, case in expect.items():
        for _ in range(40):
            n = rng.randint(3 if kind == "rank1" else 5, 9)
            A = random_form(kind, n, rng.randrange(10**9)).assemble()
            want = 1 if kind == "rank1" else 2
            res.check(offdiag_rank(A).value == want, f"{kind}: generated offdiag rank != {want}")
            try:
                form, tag = decompose(A)
            except QfpError as e:
                res.check(False, f"{kind}: {e}")
                continue
            res.check(form.assemble() == A, f"{kind}: round trip {A.to_rows()}")
            res.check((tag.case if tag else None) == case, f"{kind}: tag {tag and tag.case}")


@suite("structure-decomp", "quintuple-validity")
def _quintuples(res, rng, ctx):
    from fractions import Fraction

    from .linalg import IndexPermutation as Perm
    from .structure import (
        Rank1Form,
        check_case22_quintuple,
        check_rank1_quintuple,
        decompose,
        find_quintuple_case22,
        find_quintuple_rank1,
        random_form,
    )

    for kind, thresh, find, chk in (("rank1", 6, find_quintuple_rank1, check_rank1_quintuple),
                                     ("case22", 8, find_quintuple_case22, check_case22_quintuple)):
        done = 0
        while done < 15:
            A = random_form(kind, rng.randint(thresh + 1, thresh + 3), rng.randrange(10**9)).assemble()
            if bareiss_rank(A.to_rows()) < thresh:
                continue
            form, tag = decompose(A)
            if kind == "case22" and tag.case != "Case22":
                continue
            done += 1
            try:
                q = find(form)
                res.check(chk(form, q.b), f"{kind}: invalid quintuple {q.b}")
            except QfpError as e:
                res.check(False, f"{kind}: {e}")
    # negative control: D of rank 3
    f = Rank1Form(Perm.identity(8), 1, (1, 1, 1, 1, 1, 1, 1), tuple(Fraction(v) for v in (1, 2, 3, 0, 0, 0, 0)), Fraction(1))
    try:
        find_quintuple_rank1(f)
        res.check(False, "rank-deficient control returned a quintuple")
    except NoQuintuple:
        res.check(True, "")


# --- arithmetic-local -------------------------------------------------------------

@suite("arithmetic-local", "gauss-crt")
def _gauss_crt(res, rng, ctx):
    gauss = ctx.get("gauss_sum")
    if gauss is None:
        from .local import gauss_sum as gauss
    from .local import units

    for _ in range(3):
        n = rng.randint(1, 3)
        A = random_symmetric(rng, n)
        for q in range(2, 31):
            for q1 in range(2, q):
                q2 = q // q1
                if q1 * q2 != q or q2 < 2 or math.gcd(q1, q2) != 1 or q1 > q2:
                    continue
                for a in units(q):
                    lhs = gauss(A, q, a)
                    rhs = gauss(A, q1, (a * q2) % q1) * gauss(A, q2, (a * q1) % q2)
                    res.check(_rel_close(lhs, rhs, 1e-9), f"C({q},{a}) != C({q1},.)C({q2},.) for {A.to_rows()}")
            for a in units(q)[:3]:
                res.check(_rel_close(gauss(A, q, a), gauss_sum_oracle(A, q, a), 1e-9),
                          f"C({q},{a}) disagrees with direct enumeration")


@suite("arithmetic-local", "gauss-conjugation")
def _gauss_conj(res, rng, ctx):
    from .local import gauss_sum, units

    for _ in range(4):
        A = random_symmetric(rng, rng.randint(1, 4))
        for q in range(2, 40):
            for a in units(q):
                z, w = gauss_sum(A, q, a), gauss_sum(A, q, q - a)
                res.check(abs(w - z.conjugate()) <= 1e-12 * max(1.0, abs(z)), f"conjugation q={q} a={a}")


@suite("arithmetic-local", "local-density-identity")
def _density(res, rng, ctx):
    from .local import ProblemInstance, local_density, prime_power_partial_sum

    for _ in range(4):
        inst = ProblemInstance(random_symmetric(rng, rng.randint(1, 3)), rng.randint(-30, 30))
        for p, kmax in ((2, 3), (3, 3), (5, 2)):
            for k in range(1, kmax + 1):
                s = prime_power_partial_sum(inst, p, k)
                d = local_density(inst, p, k)
                res.check(_rel_close(s.real, d, 1e-9) and abs(s.imag) < 1e-9 * (1 + abs(s.real)),
                          f"sum T(q) over q | {p}^{k} = {s}, delta = {d}")


@suite("arithmetic-local", "hua-obstruction")
def _hua(res, rng, ctx):
    from .local import ProblemInstance, singular_series_truncated

    I5 = SymmetricIntMatrix.identity(5)
    for t in range(1, 49):
        est = singular_series_truncated(ProblemInstance(I5, t), 1).product_estimate
        res.check((est > 0) == (t % 24 == 5) and est >= 0, f"t={t}: product_estimate={est}")


# --- counting ----------------------------------------------------------------

@suite("counting", "count-naive-oracle")
def _count(res, rng, ctx):
    from .counting import count_solutions, count_solutions_naive
    from .local import ProblemInstance

    for _ in range(12):
        n = rng.randint(1, 3)
        A = random_symmetric(rng, n, -3, 3)
        X = rng.randint(5, 40)
        x = [rng.choice([2, 3, 4, 5]) for _ in range(n)]
        t = A.quad(x) if rng.random() < 0.7 else rng.randint(-50, 50)
        inst = ProblemInstance(A, t)
        a, b = count_solutions(inst, X), count_solutions_naive(inst, X)
        res.check(a.unit_count == b.unit_count and a.prime_only_count == b.prime_only_count
                  and _rel_close(a.lambda_weighted, b.lambda_weighted, 1e-9), f"count mismatch {A.to_rows()} t={t}")
        res.check(a.lambda_weighted <= math.log(X) ** n * a.unit_count + 1e-9, "lambda bound")


@suite("counting", "bilinear-naive-oracle")
def _bilinear(res, rng, ctx):
    from .counting import count_bilinear, count_bilinear_naive

    for _ in range(12):
        n, k = rng.randint(1, 3), rng.randint(1, 3)
        C = [[rng.randint(-2, 2) for _ in range(k)] for _ in range(n)]
        H = [[rng.randint(-1, 1)] for _ in range(n)] if rng.random() < 0.4 else None
        box = rng.choice(["positive", "symmetric"])
        res.check(count_bilinear(C, H, X=3, box=box) == count_bilinear_naive(C, H, X=3, box=box),
                  f"bilinear mismatch C={C} H={H} box={box}")


@suite("counting", "pair-injection")
def _injection(res, rng, ctx):
    from fractions import Fraction

    from .counting import verify_injection

    cases = [([[1]], 3), ([[1, 0], [0, -1]], 3)]
    for _ in range(8):
        n = rng.randint(1, 3)
        C = [[Fraction(0)] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                C[i][j] = C[j][i] = Fraction(rng.randint(-3, 3), rng.choice([1, 2, 3]))
        cases.append((C, rng.randint(2, 5 if n == 3 else 8)))
    for C, X in cases:
        rep = verify_injection(C, None, X)
        res.check(rep.holds, f"injection violated: C={C} X={X} lhs={rep.lhs} rhs={rep.rhs}")


# --- circle-arcs ----------------------------------------------------------------

@suite("circle-arcs", "fourier-completeness")
def _fourier(res, rng, ctx):
    from .arcs import ArcFamily, build_arcs, major_arc_integral, representation_histogram
    from .local import ProblemInstance

    for _ in range(5):
        n = rng.randint(1, 3)
        A = random_symmetric(rng, n, -3, 3)
        X = rng.choice([30, 60, 120])
        x = [rng.choice([2, 3, 5, 7]) for _ in range(n)]
        t = A.quad(x)
        inst = ProblemInstance(A, t)
        for weights in ("unit", "lambda"):
            h = representation_histogram(inst, X, weights)
            for fam in (build_arcs(X, rng.choice([1, 1.5, 2])), ArcFamily.full_cover(X)):
                rep = major_arc_integral(h, t, fam)
                tol = 1e-6 * max(1.0, rep.I_total)
                res.check(abs(rep.I_major + rep.I_minor - rep.I_total) <= tol, f"completeness A={A.to_rows()} t={t}")
                if fam.K is None:
                    res.check(abs(rep.I_major - rep.I_total) <= tol, "full cover")


@suite("circle-arcs", "histogram-and-s-alpha")
def _hist(res, rng, ctx):
    from .arcs import build_arcs, representation_histogram, s_alpha, s_alpha_direct
    from .counting import count_solutions
    from .local import ProblemInstance, von_mangoldt_table

    for _ in range(5):
        A = random_symmetric(rng, 2, -3, 3)
        X = rng.choice([20, 35, 50])
        inst = ProblemInstance(A, 0)
        h = representation_histogram(inst, X, "lambda")
        psi = von_mangoldt_table(X).psi()
        res.check(_rel_close(h.total_mass(), psi**2, 1e-6), "total mass")
        for alpha in (0.0, 0.5, rng.random()):
            res.check(_rel_close(s_alpha(h, alpha), s_alpha_direct(inst, X, alpha, "lambda"), 1e-9), f"S({alpha})")
        t = int(h.ms[len(h.ms) // 2])
        c = count_solutions(ProblemInstance(A, t), X)
        res.check(_rel_close(h(t), c.lambda_weighted, 1e-9), "r(t) vs count_solutions")
    for X, K in ((100, 1), (1000, 2), (5000, 1.5)):
        res.check(build_arcs(X, K).is_disjoint(), f"arcs overlap X={X} K={K}")


def run_verify(scope: str = "all", budget: int | None = None, seed: int = 0, gauss_sum=None) -> VerifyReport:
    """Run every suite of ``scope`` ("all" or a module name).

    ``gauss_sum`` substitutes the Gauss-sum implementation seen by the CRT
    suite; it exists so a deliberately broken implementation can be shown to
    be caught.
    """
    if scope != "all" and scope not in MODULES:
        raise ValueError(f"unknown scope {scope!r}; choose 'all' or one of {', '.join(MODULES)}")
    ctx = {"gauss_sum": gauss_sum, "budget": budget}
    results = []
    for module, name, fn in _SUITES:
        if scope != "all" and module != scope:
            continue
        res = SuiteResult(name, module)
        rng = random.Random(f"{seed}:{name}")
        t0 = time.perf_counter()
        try:
            fn(res, rng, ctx)
        except Exception as e:  # a crash is a failure of that suite, not of the run
            res.check(False, f"{type(e).__name__}: {e}")
        res.seconds = time.perf_counter() - t0
        results.append(res)
    return VerifyReport(results)
