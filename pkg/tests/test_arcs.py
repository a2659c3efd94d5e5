import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qfp.arcs import (
    ArcFamily,
    build_arcs,
    major_arc_integral,
    minor_arc_scan,
    representation_histogram,
    representation_histogram_naive,
    s_alpha,
    s_alpha_direct,
    weyl_probe,
)
from qfp.counting import count_solutions
from qfp.errors import PTooLarge, SplitUnavailable
from qfp.linalg import SymmetricIntMatrix
from qfp.local import ProblemInstance, euler_phi, von_mangoldt_table
from qfp.verify import random_symmetric

HYP = SymmetricIntMatrix.from_rows([[0, 1], [1, 0]])


def hist(rows, X, weights="unit", mode="direct"):
    return representation_histogram(ProblemInstance(SymmetricIntMatrix.from_rows(rows), 0), X, weights, mode)


def test_histogram_examples():
    h = hist([[1]], 5)
    assert h.as_dict() == {4: 1, 9: 1, 16: 1, 25: 1}
    h = hist([[1, 0], [0, 1]], 5)
    assert (h(8), h(13), h(29), h(7)) == (1, 2, 2, 0)
    h = hist([[0, 1], [1, 0]], 3)
    assert h.as_dict() == {8: 1, 12: 2, 18: 1}


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3), st.integers(2, 20), st.sampled_from(["unit", "lambda"]))
def test_histogram_matches_naive(seed, n, X, weights):
    A = random_symmetric(random.Random(seed), n)
    inst = ProblemInstance(A, 0)
    h = representation_histogram(inst, X, weights)
    naive = representation_histogram_naive(inst, X, weights)
    assert set(h.as_dict()) == set(naive)
    for m, v in naive.items():
        assert h(m) == pytest.approx(v, rel=1e-12)


def test_lambda_total_mass():
    for n, X in ((1, 50), (2, 40), (3, 20)):
        h = representation_histogram(ProblemInstance(SymmetricIntMatrix.identity(n), 0), X, "lambda")
        assert h.total_mass() == pytest.approx(von_mangoldt_table(X).psi() ** n, rel=1e-6)
        assert (h.r >= 0).all()


def test_split_mode():
    A = SymmetricIntMatrix.from_rows([[1, 1, 0, 0], [1, -2, 0, 0], [0, 0, 3, 0], [0, 0, 0, -1]])
    inst = ProblemInstance(A, 0)
    a = representation_histogram(inst, 12, "lambda", mode="split")
    b = representation_histogram(inst, 12, "lambda", mode="direct")
    assert np.array_equal(a.ms, b.ms)
    assert np.allclose(a.r, b.r, rtol=1e-12)
    with pytest.raises(SplitUnavailable):
        representation_histogram(ProblemInstance(SymmetricIntMatrix.from_rows([[1] * 3] * 3), 0), 5, mode="split")


def test_histogram_agrees_with_count():
    inst = ProblemInstance(SymmetricIntMatrix.identity(3), 83)
    for weights, field in (("unit", "unit_count"), ("lambda", "lambda_weighted")):
        h = representation_histogram(inst, 30, weights)
        assert h(83) == pytest.approx(getattr(count_solutions(inst, 30), field), rel=1e-9)


def test_s_alpha_examples():
    h = representation_histogram(ProblemInstance(HYP, 0), 20, "lambda")
    assert s_alpha(h, 0) == pytest.approx(h.total_mass())
    assert abs(s_alpha(h, 1) - s_alpha(h, 0)) < 1e-9
    alt = sum(v * (-1) ** m for m, v in h.as_dict().items())
    assert s_alpha(h, 0.5) == pytest.approx(alt)
    assert s_alpha(h, 0.5) == pytest.approx(s_alpha_direct(ProblemInstance(HYP, 0), 20, 0.5, "lambda"))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 50), st.floats(0, 1), st.sampled_from(["unit", "lambda"]))
def test_s_alpha_matches_direct(seed, X, alpha, weights):
    inst = ProblemInstance(random_symmetric(random.Random(seed), 2), 0)
    h = representation_histogram(inst, X, weights)
    a, b = s_alpha(h, alpha), s_alpha_direct(inst, X, alpha, weights)
    assert abs(a - b) <= 1e-9 * max(1.0, abs(b))


def test_build_arcs_examples():
    fam = build_arcs(math.exp(10), 1)
    assert float(fam.P) == pytest.approx(10)
    assert len(fam.intervals) == sum(euler_phi(q) for q in range(1, 11)) == 32
    assert fam.is_disjoint()
    one = [a for a in fam.intervals if a.q == 1]
    assert len(one) == 1 and one[0].center == 1 and one[0].a == 1
    assert one[0].halfwidth == fam.P / Fraction(math.exp(10)) ** 2
    fam0 = build_arcs(1000, 0)
    assert fam0.P == 1 and len(fam0.intervals) == 1


def test_integer_x_rounds_p_down():
    # log(22026) falls just short of 10, so q = 10 is excluded
    assert len(build_arcs(22026, 1).intervals) == 28


def test_arc_invariants():
    for X, K in ((100, 1), (300, 1.5), (1000, 2)):
        fam = build_arcs(X, K)
        assert fam.is_disjoint()
        assert all(1 <= a.q <= fam.P and math.gcd(a.a, a.q) == 1 for a in fam.intervals)
        expected = sum(2 * fam.P / (q * Fraction(X) ** 2) * euler_phi(q) for q in range(1, math.floor(fam.P) + 1))
        assert fam.total_measure() == expected


def test_p_too_large():
    with pytest.raises(PTooLarge):
        build_arcs(10, 3)


def _suite():
    rng = random.Random(10)
    for _ in range(8):
        n = rng.randint(1, 3)
        A = random_symmetric(rng, n, -3, 3)
        X = rng.choice((20, 60, 120) if n < 3 else (15, 30))
        yield A, X, rng.choice((0.5, 1, 1.5))


@pytest.mark.parametrize("A, X, K", list(_suite()))
def test_fourier_completeness(A, X, K):
    h = representation_histogram(ProblemInstance(A, 0), X, "lambda")
    ts = [int(m) for m in h.ms[:: max(1, len(h.ms) // 3)]] + [h.m_max + 7]
    for t in ts:
        rep = major_arc_integral(h, t, build_arcs(X, K))
        assert rep.completeness_error <= 1e-6 * max(1.0, abs(rep.I_total))
        full = major_arc_integral(h, t, ArcFamily.full_cover(X))
        assert abs(full.I_major - full.I_total) <= 1e-6 * max(1.0, abs(full.I_total))


def test_t_outside_range_cancels():
    h = representation_histogram(ProblemInstance(SymmetricIntMatrix.identity(2), 0), 30)
    rep = major_arc_integral(h, -5, build_arcs(30, 1))
    assert rep.I_total == 0 and rep.major_share is None
    assert abs(rep.I_major + rep.I_minor) < 1e-9


def test_predicted_main():
    inst = ProblemInstance(SymmetricIntMatrix.diag([1, 1, -1]), 3)
    h = representation_histogram(inst, 40)
    rep = major_arc_integral(h, 3, build_arcs(40, 1), inst=inst)
    assert isinstance(rep.predicted_main, float)
    rows = rep.per_q_csv_rows()
    assert rows[0] == ("q", "arcs", "re", "im")
    assert sum(r[1] for r in rows[1:]) == len(build_arcs(40, 1).intervals)


def test_mismatched_x():
    h = representation_histogram(ProblemInstance(SymmetricIntMatrix.identity(1), 0), 30)
    with pytest.raises(ValueError):
        major_arc_integral(h, 4, build_arcs(40, 1))


def test_weyl_examples():
    lam = von_mangoldt_table(100)
    assert weyl_probe(1, 0, 100, 0) == pytest.approx(lam.psi())
    ten = von_mangoldt_table(10)
    expected = sum(ten(x) * (-1) ** (x * x) for x in range(1, 11))
    assert weyl_probe(1, 0, 10, 0.5) == pytest.approx(expected)
    assert weyl_probe(Fraction(1, 3), 0.25, 30, 0.2) == pytest.approx(
        sum(von_mangoldt_table(30)(x) * complex(math.cos(2 * math.pi * (0.2 * x * x / 3 + 0.25 * x)),
                                                 math.sin(2 * math.pi * (0.2 * x * x / 3 + 0.25 * x)))
            for x in range(2, 31)))


def test_minor_scan():
    scan = minor_arc_scan(1, 1000, 10_000, K=1)
    assert not scan.empty and scan.n_points < 10_000
    assert scan.sup_abs < scan.psi
    assert not build_arcs(1000, 1).contains(scan.argmax_alpha)


def test_empty_scan():
    scan = minor_arc_scan(1, 100, 10, arcs=ArcFamily.full_cover(100))
    assert scan.empty and scan.argmax_alpha is None
    with pytest.raises(ValueError):
        minor_arc_scan(1, 100, 5)
