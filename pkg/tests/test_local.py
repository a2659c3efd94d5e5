import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qfp.errors import ModulusTooLarge, NotCoprime
from qfp.linalg import SymmetricIntMatrix
from qfp.local import (
    ProblemInstance,
    auto_kmax,
    congruence_count,
    euler_phi,
    factorize,
    gauss_sum,
    local_density,
    prime_power_partial_sum,
    singular_series_truncated,
    term_T,
    units,
    von_mangoldt_table,
)
from qfp.verify import gauss_sum_oracle, random_symmetric

I2 = SymmetricIntMatrix.identity(2)
I5 = SymmetricIntMatrix.identity(5)


def test_von_mangoldt_values():
    L = von_mangoldt_table(100)
    assert L(2) == math.log(2) and L(8) == math.log(2) and L(9) == math.log(3)
    assert L(1) == L(6) == L(12) == 0
    assert L.psi() == pytest.approx(94.045, abs=1e-3)


def test_von_mangoldt_against_trial_division():
    L = von_mangoldt_table(500)
    for k in range(2, 501):
        f = factorize(k)
        expected = math.log(f[0][0]) if len(f) == 1 else 0.0
        assert L(k) == expected
    with pytest.raises(ValueError):
        von_mangoldt_table(0)


def test_gauss_sum_examples():
    assert gauss_sum(I2, 1, 1) == 1
    for n in range(1, 6):
        assert gauss_sum(SymmetricIntMatrix.identity(n), 2, 1) == pytest.approx((-1) ** n)
    assert gauss_sum(I2, 4, 1) == pytest.approx(-4)


def test_gauss_sum_not_coprime():
    with pytest.raises(NotCoprime):
        gauss_sum(I2, 6, 3)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3), st.integers(2, 40))
def test_gauss_crt_matches_direct(seed, n, q):
    rng = random.Random(seed)
    A = random_symmetric(rng, n)
    a = rng.choice(units(q))
    crt = gauss_sum(A, q, a, method="crt")
    direct = gauss_sum(A, q, a, method="direct")
    assert abs(crt - direct) <= 1e-9 * max(1.0, abs(direct))
    assert abs(direct) <= euler_phi(q) ** n + 1e-9


def test_gauss_direct_matches_plain_loop():
    rng = random.Random(5)
    for q in (3, 5, 8, 9, 12):
        A = random_symmetric(rng, 3)
        for a in units(q):
            assert abs(gauss_sum(A, q, a, method="direct") - gauss_sum_oracle(A, q, a)) < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 30))
def test_gauss_conjugation(seed, q):
    rng = random.Random(seed)
    A = random_symmetric(rng, 3)
    for a in units(q):
        assert abs(gauss_sum(A, q, q - a) - gauss_sum(A, q, a).conjugate()) <= 1e-12 * max(1.0, abs(gauss_sum(A, q, a)))


def test_term_T_examples():
    assert term_T(ProblemInstance(I2, 7), 1) == 1
    assert term_T(ProblemInstance(I2, 2), 2) == pytest.approx(1)
    inst = ProblemInstance(I5, 13)
    total = prime_power_partial_sum(inst, 2, 3)
    assert total == pytest.approx(8 * euler_phi(8) ** -5 * 4**5)
    assert congruence_count(I5, 13, 8) == 4**5


def test_local_density_examples():
    assert local_density(ProblemInstance(I5, 5), 2, 3) == pytest.approx(8)
    assert local_density(ProblemInstance(I5, 1), 2, 3) == 0
    assert local_density(ProblemInstance(I2, 2), 3, 1) == pytest.approx(3)
    with pytest.raises(ValueError):
        local_density(ProblemInstance(I2, 2), 4, 1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.sampled_from([(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (5, 1), (7, 1)]))
def test_partial_sum_identity(seed, n, pk):
    rng = random.Random(seed)
    inst = ProblemInstance(random_symmetric(rng, n), rng.randint(-30, 30))
    p, k = pk
    lhs = prime_power_partial_sum(inst, p, k)
    rhs = local_density(inst, p, k)
    assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(rhs))


def test_single_phi_breaks_identity():
    inst = ProblemInstance(I5, 5)
    lit = prime_power_partial_sum(inst, 2, 3, single_phi=True)
    assert abs(lit - local_density(inst, 2, 3)) > 1
    assert term_T(inst, 8, single_phi=True) == pytest.approx(term_T(inst, 8) * euler_phi(8) ** 4)


def test_singular_series_examples():
    rep = singular_series_truncated(ProblemInstance(I5, 53), 12)
    assert rep.local_densities[(2, 3)] == pytest.approx(8)
    assert rep.local_densities[(3, 1)] > 0
    assert rep.product_estimate > 0
    assert abs(rep.partial_sum.imag) < 1e-9 * (1 + abs(rep.partial_sum.real))
    assert all(abs(T.imag) < 1e-9 * (1 + abs(T.real)) for T in rep.terms.values())

    rep = singular_series_truncated(ProblemInstance(I5, 54), 4)
    assert rep.local_densities[(2, 3)] == 0
    assert rep.product_estimate == 0

    rng = random.Random(1)
    A = random_symmetric(rng, 3)
    assert singular_series_truncated(ProblemInstance(A, 4), 1, primes=(2,)).partial_sum == 1


def test_hua_obstruction_mod_24():
    for t in range(1, 49):
        rep = singular_series_truncated(ProblemInstance(I5, t), 1)
        assert (rep.product_estimate == 0) == (t % 24 != 5), t


def test_auto_kmax():
    assert auto_kmax(I5, 2) == 3
    assert auto_kmax(I5, 3) == 1
    assert auto_kmax(SymmetricIntMatrix.diag([9, 1]), 3) == 3


def test_budget_errors():
    with pytest.raises(ModulusTooLarge):
        local_density(ProblemInstance(I5, 5), 7, 2, budget=1000)
    with pytest.raises(ModulusTooLarge):
        gauss_sum(I5, 49, 1, budget=1000)
    # k_max is lowered to fit the budget rather than failing
    rep = singular_series_truncated(ProblemInstance(I2, 2), 1, primes=(2,), k_max=5, budget=64)
    assert rep.k_max[2] == 4


def test_budget_from_environment(monkeypatch):
    monkeypatch.setenv("QFP_BUDGET", "10")
    with pytest.raises(ModulusTooLarge):
        local_density(ProblemInstance(I2, 2), 7, 1)


def test_report_json_shape():
    rep = singular_series_truncated(ProblemInstance(I2, 2), 3, primes=(2, 3))
    js = rep.to_json()
    assert js["terms"][0] == {"q": 1, "T": {"re": 1.0, "im": 0.0}}
    assert [p["Q"] for p in js["partial_sums"]] == [1, 2, 3]
    assert {d["p"] for d in js["local_densities"]} == {2, 3}
