import itertools

import numpy as np
import pytest

from spreadid.model import GridParams, SupportSet, random_support
from spreadid.probing import (
    EnumerationBudgetError,
    ProbingSequence,
    RowSubset,
    alltop,
    build_matrix,
    column_submatrix,
    random_disc,
    row_submatrix,
    spark_exhaustive,
)


class TestAlltop:
    def test_length_one(self):
        with pytest.warns(UserWarning):
            c = alltop(1)
        assert c.c.tolist() == [1.0 + 0.0j]

    def test_length_three_values(self):
        with pytest.warns(UserWarning):
            c = alltop(3)
        expect = np.array([1.0, np.exp(2j * np.pi / 3), np.exp(4j * np.pi / 3)]) / np.sqrt(3)
        np.testing.assert_allclose(c.c, expect, atol=1e-14)

    @pytest.mark.parametrize("L", [5, 7, 19, 31])
    def test_unit_norm(self, L):
        c = alltop(L)
        assert c.norm == pytest.approx(1.0)
        np.testing.assert_allclose(np.abs(c.c), 1 / np.sqrt(L), atol=1e-14)

    def test_warns_only_below_guarantee(self):
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("error")
            alltop(5)  # prime and >= 5: silent


class TestRandomDisc:
    def test_disc_membership_and_determinism(self):
        a = random_disc(50, np.random.default_rng(9))
        b = random_disc(50, np.random.default_rng(9))
        assert np.all(np.abs(a.c) <= 1.0 + 1e-15)
        np.testing.assert_array_equal(a.c, b.c)

    def test_second_moment(self):
        # E|c|^2 = 1/2 for the uniform disc.
        c = random_disc(100_000, np.random.default_rng(10))
        assert np.mean(np.abs(c.c) ** 2) == pytest.approx(0.5, rel=0.02)


class TestProbingSequenceValidation:
    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            ProbingSequence(c=np.zeros(4), kind="custom")

    def test_rejects_bad_alltop_magnitudes(self):
        with pytest.raises(ValueError):
            ProbingSequence(c=np.ones(4), kind="alltop")


class TestBuildMatrix:
    def test_one_by_one(self):
        A = build_matrix(ProbingSequence(c=np.array([1.0 + 0j])))
        assert A.A.shape == (1, 1)
        assert A.A[0, 0] == 1.0

    def test_two_by_four_explicit(self):
        A = build_matrix(ProbingSequence(c=np.array([1.0, 1.0j])))
        expect = np.array(
            [[1, 1, 1j, 1j],
             [1j, -1j, 1, -1]]
        )
        np.testing.assert_allclose(A.A, expect, atol=1e-14)

    def test_entry_formula(self):
        rng = np.random.default_rng(11)
        c = random_disc(5, rng)
        A = build_matrix(c).A
        for p in range(5):
            for k in range(5):
                for m in range(5):
                    expect = c.c[(k - p) % 5] * np.exp(2j * np.pi * p * m / 5)
                    assert A[p, k * 5 + m] == pytest.approx(expect)

    def test_block_construction_equivalence(self):
        # A_{c,k} = diag(c_k, c_{k-1}, ..., c_{k-L+1}) @ F^H with
        # [F]_{p,m} = exp(-j 2 pi p m / L).
        L = 7
        c = random_disc(L, np.random.default_rng(12))
        A = build_matrix(c).A
        p, m = np.arange(L)[:, None], np.arange(L)[None, :]
        FH = np.exp(-2j * np.pi * p * m / L).conj().T
        blocks = []
        for k in range(L):
            Ck = np.diag(c.c[(k - np.arange(L)) % L])
            blocks.append(Ck @ FH)
        ref = np.hstack(blocks)
        err = np.linalg.norm(A - ref) / np.linalg.norm(ref)
        assert err <= 1e-13

    def test_column_norms(self):
        c = random_disc(9, np.random.default_rng(13))
        A = build_matrix(c).A
        np.testing.assert_allclose(np.linalg.norm(A, axis=0), c.norm, rtol=1e-12)


class TestSubmatrices:
    def test_column_full_and_single(self):
        c = random_disc(5, np.random.default_rng(14))
        A = build_matrix(c)
        full = column_submatrix(A, SupportSet.full(5))
        np.testing.assert_array_equal(full, A.A)
        first = column_submatrix(A, SupportSet(5, frozenset({(0, 0)})))
        np.testing.assert_array_equal(first[:, 0], A.A[:, 0])

    def test_column_selection_is_bit_identical(self):
        g = GridParams(L=5)
        rng = np.random.default_rng(15)
        A = build_matrix(random_disc(5, rng))
        sup = random_support(g, 7, rng)
        sub = column_submatrix(A, sup)
        for j, idx in enumerate(sup.indices()):
            assert np.array_equal(sub[:, j], A.A[:, idx])

    def test_empty_support_gives_zero_columns(self):
        A = build_matrix(random_disc(5, np.random.default_rng(16)))
        sub = column_submatrix(A, SupportSet(5, frozenset()))
        assert sub.shape == (5, 0)

    def test_full_rank_column_submatrix(self):
        rng = np.random.default_rng(17)
        A = build_matrix(random_disc(5, rng))
        sup = random_support(GridParams(L=5), 5, rng)
        assert np.linalg.matrix_rank(column_submatrix(A, sup)) == 5

    def test_rows(self):
        A = build_matrix(random_disc(5, np.random.default_rng(18)))
        np.testing.assert_array_equal(row_submatrix(A, RowSubset(5, (0, 1, 2, 3, 4))), A.A)
        np.testing.assert_array_equal(row_submatrix(A, RowSubset(5, (0,))), A.A[[0], :])
        # order follows the listing
        swapped = row_submatrix(A, RowSubset(5, (2, 0)))
        np.testing.assert_array_equal(swapped[0], A.A[2])
        np.testing.assert_array_equal(swapped[1], A.A[0])

    def test_row_subset_validation(self):
        with pytest.raises(ValueError):
            RowSubset(5, (0, 0))
        with pytest.raises(ValueError):
            RowSubset(5, (5,))
        with pytest.raises(ValueError):
            RowSubset(5, ())


class TestSparkExhaustive:
    def test_identity_exceeds(self):
        assert spark_exhaustive(np.eye(2), 2) is None

    def test_duplicate_column(self):
        M = np.array([[1.0, 2.0, 1.0], [0.0, 1.0, 0.0]])
        assert spark_exhaustive(M, 3) == 2

    def test_zero_column(self):
        M = np.array([[0.0, 1.0], [0.0, 1.0]])
        assert spark_exhaustive(M, 2) == 1

    def test_budget_guard(self):
        with pytest.raises(EnumerationBudgetError):
            spark_exhaustive(np.ones((2, 60)), 30)

    def test_row_subsampled_full_spark(self):
        # Every P columns of the P-row restriction are independent, so the
        # smallest dependent set has P + 1 columns.
        A = build_matrix(random_disc(5, np.random.default_rng(19)))
        M = row_submatrix(A, RowSubset.prefix(5, 3))
        assert spark_exhaustive(M, 3) is None
        assert spark_exhaustive(M, 4) == 4


class TestFullSparkProperty:
    def test_exhaustive_at_L5(self):
        # every 5-column submatrix keeps sigma_min above 1e-8 * sigma_max
        A = build_matrix(random_disc(5, np.random.default_rng(20))).A
        for cols in itertools.combinations(range(25), 5):
            s = np.linalg.svd(A[:, list(cols)], compute_uv=False)
            assert s[-1] > 1e-8 * s[0]

    def test_sampled_at_L19(self):
        rng = np.random.default_rng(21)
        A = build_matrix(random_disc(19, rng)).A
        for _ in range(200):
            cols = rng.choice(361, size=19, replace=False)
            s = np.linalg.svd(A[:, cols], compute_uv=False)
            assert s[-1] > 1e-8 * s[0]
