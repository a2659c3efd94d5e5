from fractions import Fraction
from itertools import permutations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qfp.errors import CaseMismatch, NonIntegralAssembly, NoQuintuple, NotOffDiagRank1, NotOffDiagRank2
from qfp.linalg import IndexPermutation, SymmetricIntMatrix, conjugate_by_permutation, rank_rational
from qfp.offdiag import offdiag_rank
from qfp.structure import (
    CASE11,
    CASE21,
    CASE22,
    Rank1Form,
    Rank2CaseTag,
    Rank2Form11,
    Rank2Form21,
    Rank2Form22,
    check_case22_quintuple,
    check_rank1_quintuple,
    classify_rank2,
    decompose,
    decompose_case11,
    decompose_case21,
    decompose_case22,
    decompose_rank1,
    find_quintuple_case22,
    find_quintuple_rank1,
    generate_from_form,
    random_form,
    rank2_tag_at,
)

ident = IndexPermutation.identity
KINDS = {"rank1": None, "case11": CASE11, "case21": CASE21, "case22": CASE22}


def _no_valid(check, f, m):
    return not any(check(f, b) for b in permutations(range(m), 5))


# --- rank 1 ---------------------------------------------------------------

def test_rank1_recovers_parameters():
    f = Rank1Form(ident(6), 1, (1, 1, 1, 1, 1), (1, 2, 3, 4, 5), Fraction(0))
    g = decompose_rank1(f.assemble())
    assert g == f
    assert g.perm == ident(6)


def test_rank1_half_h_round_trip():
    f = Rank1Form(ident(6), 2, (2, 2, 0, 2, 2), (3, -1, 4, 0, 2), Fraction(1, 2))
    A = f.assemble()
    g = decompose_rank1(A)
    assert g.assemble() == A
    assert g.h == Fraction(1, 2)


def test_rank1_single_coordinate_sets_h_zero():
    f = Rank1Form(ident(6), 3, (1, 0, 0, 0, 0), (1, 2, 3, 4, 5), Fraction(2))
    A = f.assemble()
    g = decompose_rank1(A)
    assert g.h == 0
    assert g.d[0] == 3  # 1 + 2 * 1 * 1 absorbed into D
    assert g.assemble() == A


def test_rank1_scalar_relation():
    # trailing off-diagonal entry over c_l equals h c_k
    f = Rank1Form(ident(6), 2, (2, 2, 0, 2, -4), (3, -1, 4, 0, 2), Fraction(1, 2))
    A = f.assemble()
    c = f.xi
    for k in range(5):
        for l in range(5):
            if k != l and c[l]:
                assert Fraction(A[k + 1, l + 1], c[l]) == f.h * c[k]


def test_rank1_rejects_other_ranks():
    with pytest.raises(NotOffDiagRank1):
        decompose_rank1(SymmetricIntMatrix.diag([1, 2, 3]))


@pytest.mark.parametrize("f", [
    Rank1Form(ident(4), 1, (1, 3, -2), (1, 1, 1), Fraction(0)),
    Rank1Form(ident(4), 1, (2, 4, -2), (1, 0, 1), Fraction(1, 2)),
])
def test_rank1_integrality_conventions(f):
    assert f.assemble().n == 4


def test_rank1_rejects_non_integral():
    with pytest.raises(NonIntegralAssembly):
        Rank1Form(ident(3), 1, (1, 1), (1, 1), Fraction(1, 2)).assemble()


def test_rank1_quintuple_examples():
    f = Rank1Form(ident(7), 0, (1, 0, 0, 0, 0, 0), (0, 1, 1, 1, 1, 1), Fraction(0))
    assert find_quintuple_rank1(f).one_based == (1, 2, 3, 4, 5)
    f = Rank1Form(ident(6), 0, (1, 0, 0, 0, 1), (5, 2, 3, 4, 0), Fraction(0))
    q = find_quintuple_rank1(f)
    assert q.one_based == (5, 1, 2, 3, 4)
    assert check_rank1_quintuple(f, q.b)


def test_rank1_no_quintuple_at_rank_five():
    f = Rank1Form(ident(6), 7, (1, 1, 1, 1, 1), (1, 2, 3, 0, 0), Fraction(0))
    assert rank_rational(f.block_matrix()) == 5
    with pytest.raises(NoQuintuple):
        find_quintuple_rank1(f)
    assert _no_valid(check_rank1_quintuple, f, 5)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(6, 9))
def test_rank1_quintuple_search_is_complete(seed, n):
    f = random_form("rank1", n, seed)
    try:
        q = find_quintuple_rank1(f)
    except NoQuintuple:
        assert rank_rational(f.block_matrix()) <= 5
        assert _no_valid(check_rank1_quintuple, f, n - 1)
    else:
        assert check_rank1_quintuple(f, q.b)


# --- rank 2: classification ---------------------------------------------

@pytest.mark.parametrize("kind", ["case11", "case21", "case22"])
def test_generated_forms_classify(kind):
    for seed in range(20):
        A = generate_from_form(kind, seed=seed, n=8)
        assert classify_rank2(A).case == KINDS[kind]


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["case11", "case21", "case22"]), st.integers(0, 10**6), st.randoms(use_true_random=False))
def test_classify_is_permutation_covariant(kind, seed, rnd):
    A = generate_from_form(kind, seed=seed, n=7)
    img = list(range(7))
    rnd.shuffle(img)
    B = conjugate_by_permutation(A, IndexPermutation(tuple(img)))
    assert classify_rank2(B).case == classify_rank2(A).case


def test_classify_rejects_rank_one():
    A = SymmetricIntMatrix.from_rows([[1] * 5] * 5)
    with pytest.raises(NotOffDiagRank2):
        classify_rank2(A)


def test_tag_orientation_for_case21():
    A = generate_from_form("case21", seed=3, n=8)
    tag = classify_rank2(A)
    assert (tag.rank_B1, tag.rank_B2) == (2, 1)


# --- rank 2: decompositions ---------------------------------------------

def test_case11_identity_block():
    f = Rank2Form11(ident(8), ((2, 0), (0, 3)), ((1, 0), (0, 1)), ((1, 0), (0, 1)),
                    ((0,) * 4, (0,) * 4), (1, 1, 1, 1))
    A = f.assemble()
    tag = classify_rank2(A)
    assert tag.case == CASE11
    assert decompose_case11(A, tag) == f


def test_case11_low_rank_trailing_block():
    f = Rank2Form11(ident(8), ((1, 0), (0, 1)), ((1, 2), (0, 1)), ((0, 1), (1, 0)),
                    ((1, 0, 2, 0), (0, 1, 1, 3)), (1, 2, 0, 0))
    A = f.assemble()
    g = decompose_case11(A, classify_rank2(A))
    assert g.assemble() == A


def test_case11_rejects_wrong_tag():
    A = generate_from_form("case22", seed=1, n=8)
    with pytest.raises(CaseMismatch):
        decompose_case11(A, classify_rank2(A))


def _form21(S, p0, p1, p2, rho, xi, d):
    bil = lambda p, q: sum(p[i] * S[i][j] * q[j] for i in range(2) for j in range(2))  # noqa: E731
    a01 = bil(p0, p1)
    mu = bil(p2, rho)
    return Rank2Form21(ident(len(xi) + 3), ((2, a01), (a01, 3)), (bil(p0, p2), bil(p1, p2)),
                       (bil(p0, rho), bil(p1, rho)), xi, 4, tuple(mu * x for x in xi),
                       Fraction(bil(rho, rho)), d)


def test_case21_xi_with_h_zero():
    # isotropic rho gives h = 0
    f = _form21(((0, 1), (1, 0)), (0, 1), (1, 1), (1, -1), (1, 0), (1, 2, 0, 1, 1), (1, 2, 3, 1, 1))
    A = f.assemble()
    tag = classify_rank2(A)
    assert tag.case == CASE21
    g = decompose_case21(A, tag)
    assert g.xi == (1, 2, 0, 1, 1) and g.h == 0
    assert g == f


def test_case21_nonzero_h():
    f = _form21(((1, 0), (0, 1)), (1, 0), (0, 1), (1, 1), (1, -1), (1, 2, 0, 1, 1), (1, 2, 3, 1, 1))
    assert f.h == 2
    A = f.assemble()
    g = decompose_case21(A, classify_rank2(A))
    assert g.h == 2 and g.assemble() == A


def test_case21_single_coordinate_xi():
    f = _form21(((1, 0), (0, 1)), (1, 0), (0, 1), (1, 1), (1, -1), (1, 0, 0, 0, 0), (1, 2, 3, 1, 1))
    A = f.assemble()
    # with one nonzero xi coordinate every placement is (1,1), so pass the tag by hand
    assert classify_rank2(A).case == CASE11
    g = decompose_case21(A, Rank2CaseTag(CASE21, ident(8), 2, 2, 1))
    assert g.h == 0
    assert g.assemble() == A


def test_case22_identity_gamma_zero_h():
    C = ((1, 0, 1, 1, 1, 2), (0, 1, 1, -1, 2, 1))
    f = Rank2Form22(ident(8), ((1, 5), (5, 2)), ((1, 0), (0, 1)), C, ((0, 0), (0, 0)), (1, 2, 3, 4, 5, 6))
    A = f.assemble()
    tag = rank2_tag_at(A, ident(8))
    assert tag.case == CASE22
    g = decompose_case22(A, tag)
    assert g == f and not g.h_underdetermined


def test_case22_half_integral_h():
    H = ((Fraction(1), Fraction(1, 2)), (Fraction(1, 2), Fraction(0)))
    C = ((2, 0, 1, 3, 1, 5), (0, 2, 2, 2, 4, 2))
    # off-diagonal part is the Gram matrix of [H^{-1} | C] under H, so a01 = (H^{-1})_{01}
    f = Rank2Form22(ident(8), ((1, 2), (2, -1)), ((1, 0), (0, 1)), C, H, (1, -1, 2, 0, 3, 1))
    A = f.assemble()
    assert offdiag_rank(A).value == 2
    g = decompose_case22(A, rank2_tag_at(A, ident(8)))
    assert g.H == H and g.C == C
    assert g.assemble() == A


def test_case22_n4_underdetermined():
    A = SymmetricIntMatrix.from_rows([[1, 1, 1, 0], [1, 1, 0, 1], [1, 0, 1, 5], [0, 1, 5, 1]])
    tag = Rank2CaseTag(CASE22, ident(4), 2, 2, 2)
    g = decompose_case22(A, tag)
    assert g.h_underdetermined
    assert g.assemble() == A


def test_n4_classifies_as_case11():
    A = SymmetricIntMatrix.from_rows([[1, 1, 1, 0], [1, 1, 0, 1], [1, 0, 1, 5], [0, 1, 5, 1]])
    assert classify_rank2(A).case == CASE11


def test_case22_quintuple_examples():
    f = Rank2Form22(ident(8), ((1, 0), (0, 1)), ((1, 0), (0, 1)),
                    ((1, 0, 0, 0, 0, 0), (0, 1, 0, 0, 0, 0)), ((0, 0), (0, 0)), (0, 0, 1, 1, 1, 1))
    assert find_quintuple_case22(f).one_based == (1, 2, 3, 4, 5)
    # boundary: four nonzero d's, the independent pair comes from outside their support
    f = Rank2Form22(ident(8), ((1, 0), (0, 1)), ((1, 0), (0, 1)),
                    ((1, 0, 1, 1, 1, 0), (0, 1, 1, 2, 0, 1)), ((0, 0), (0, 0)), (1, 1, 1, 1, 0, 0))
    q = find_quintuple_case22(f)
    assert min(q.b[:2]) >= 4
    assert check_case22_quintuple(f, q.b)


def test_case22_no_quintuple():
    # the d = 0 rows are all multiples of one row, so rank(A) <= 2 + 1 + 3
    f = Rank2Form22(ident(8), ((2, 1), (1, 3)), ((1, 0), (0, 1)),
                    ((1, 2, 3, 0, 1, 1), (0, 0, 0, 1, 1, 2)), ((1, 0), (0, 1)), (0, 0, 0, 1, 2, 3))
    assert rank_rational(f.block_matrix()) == 6
    with pytest.raises(NoQuintuple):
        find_quintuple_case22(f)
    assert _no_valid(check_case22_quintuple, f, 6)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(7, 9))
def test_case22_quintuple_search_is_complete(seed, n):
    f = random_form("case22", n, seed)
    try:
        q = find_quintuple_case22(f)
    except NoQuintuple:
        assert rank_rational(f.block_matrix()) <= 7
        assert _no_valid(check_case22_quintuple, f, n - 2)
    else:
        assert check_case22_quintuple(f, q.b)


# --- generator round trips ------------------------------------------------

@pytest.mark.parametrize("kind", sorted(KINDS))
@pytest.mark.parametrize("n", [5, 8, 9])
def test_generator_round_trip(kind, n):
    for seed in range(25):
        A = generate_from_form(kind, seed=seed, n=n)
        form, tag = decompose(A)
        assert form.assemble() == A
        if tag is not None:
            assert tag.case == KINDS[kind]


def test_generator_is_deterministic():
    assert generate_from_form("case21", seed=11) == generate_from_form("case21", seed=11)
    assert generate_from_form(Rank2Form22, seed=2) == generate_from_form("case22", seed=2)


def test_decompose_rejects_high_rank():
    A = SymmetricIntMatrix.from_rows([[2, 1, 0, 1, 0, 1], [1, 2, 1, 0, 1, 0], [0, 1, 2, 1, 1, 1],
                                      [1, 0, 1, 2, 0, 1], [0, 1, 1, 0, 2, 1], [1, 0, 1, 1, 1, 2]])
    assert offdiag_rank(A).value >= 3
    with pytest.raises(NotOffDiagRank2):
        decompose(A)
