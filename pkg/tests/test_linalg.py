import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bftest import (
    DimensionMismatchError,
    RankDeficientError,
    SingularMatrixError,
    greville_identity_residual,
    pinv_full_row_rank,
    solve_symmetric,
)
from bftest.linalg import condition_number


class TestPinvFullRowRank:
    def test_single_row(self):
        # G G' = 4, so G+ = G'/4
        P = pinv_full_row_rank([[0.0, 2.0]])
        np.testing.assert_allclose(P, [[0.0], [0.5]])

    def test_identity(self):
        np.testing.assert_allclose(pinv_full_row_rank(np.eye(2)), np.eye(2))

    def test_three_four_row(self):
        # Direct multiplication oracle: G G+ = (3*0.12 + 4*0.16) = 1
        P = pinv_full_row_rank([[3.0, 4.0]])
        np.testing.assert_allclose(P, [[0.12], [0.16]])
        np.testing.assert_allclose(np.array([[3.0, 4.0]]) @ P, [[1.0]], atol=1e-15)

    def test_left_inverse_contract_on_random_matrices(self, rng):
        # 500 random full-row-rank draws with q <= p <= 8
        for _ in range(500):
            p = int(rng.integers(1, 9))
            q = int(rng.integers(1, p + 1))
            G = rng.normal(size=(q, p))
            P = pinv_full_row_rank(G)
            np.testing.assert_allclose(G @ P, np.eye(q), atol=1e-10)

    def test_projection_symmetric_idempotent(self, rng):
        for _ in range(50):
            p = int(rng.integers(1, 9))
            q = int(rng.integers(1, p + 1))
            G = rng.normal(size=(q, p))
            proj = pinv_full_row_rank(G) @ G
            np.testing.assert_allclose(proj, proj.T, atol=1e-9)
            np.testing.assert_allclose(proj @ proj, proj, atol=1e-9)

    def test_rank_deficient_raises(self):
        with pytest.raises(RankDeficientError):
            pinv_full_row_rank([[1.0, 2.0], [2.0, 4.0]])  # duplicated row

    def test_too_many_rows_raises(self):
        with pytest.raises(RankDeficientError):
            pinv_full_row_rank(np.ones((3, 2)))

    def test_cond_cap_configurable(self):
        ok = np.array([[1.0, 0.0], [0.0, 1e-5]])  # cond(GG') = 1e10, below cap
        pinv_full_row_rank(ok)
        hard = np.array([[1.0, 0.0], [0.0, 1e-7]])  # cond(GG') = 1e14
        with pytest.raises(RankDeficientError):
            pinv_full_row_rank(hard)
        P = pinv_full_row_rank(hard, cond_cap=1e16)
        np.testing.assert_allclose(hard @ P, np.eye(2), atol=1e-9)


class TestGrevilleIdentity:
    def test_single_offdiagonal_row_with_diagonal_k(self):
        # Both products equal diag(0, 4): direct multiplication
        holds, residual = greville_identity_residual([[0.0, 1.0]], np.diag([1.0, 2.0]))
        assert holds
        assert residual == 0.0

    def test_full_identity_g(self, rng):
        K = rng.normal(size=(3, 3)) + 3 * np.eye(3)
        holds, _ = greville_identity_residual(np.eye(3), K)
        assert holds

    def test_gregory_veall_matrices_fail(self):
        # Jacobians of the counterexample pair at its standard point; residual
        # verified by direct multiplication of both products:
        # G+G KK' and KK' G+G differ by ~24.25/17 in the off-diagonal.
        G = np.array([[1.0, 4.0]])
        K = np.array([[2.0, 2.0], [0.0, -0.25]])
        holds, residual = greville_identity_residual(G, K)
        assert not holds
        assert residual == pytest.approx(24.25 / 17.0, rel=1e-12)

    @given(c=st.floats(min_value=0.01, max_value=100.0), sign=st.sampled_from([-1.0, 1.0]))
    @settings(max_examples=40, deadline=None)
    def test_scalar_k_always_commutes(self, c, sign):
        G = np.array([[1.0, 2.0, -1.0]])
        holds, _ = greville_identity_residual(G, sign * c * np.eye(3))
        assert holds

    def test_negating_k_changes_nothing(self, rng):
        G = rng.normal(size=(2, 4))
        K = rng.normal(size=(4, 4)) + 2 * np.eye(4)
        _, r_plus = greville_identity_residual(G, K)
        _, r_minus = greville_identity_residual(G, -K)
        assert r_plus == pytest.approx(r_minus, rel=0, abs=0)

    def test_shape_validation(self):
        with pytest.raises(DimensionMismatchError):
            greville_identity_residual([[1.0, 2.0]], np.eye(3))


class TestSolveSymmetric:
    def test_identity(self):
        np.testing.assert_allclose(
            solve_symmetric(np.eye(2), [1.0, 2.0]), [1.0, 2.0]
        )

    def test_diagonal(self):
        np.testing.assert_allclose(
            solve_symmetric(np.diag([2.0, 4.0]), [2.0, 4.0]), [1.0, 1.0]
        )

    def test_two_by_two(self):
        # Substitution: [[2,1],[1,2]] @ (1,1) = (3,3)
        x = solve_symmetric([[2.0, 1.0], [1.0, 2.0]], [3.0, 3.0])
        np.testing.assert_allclose(x, [1.0, 1.0])

    def test_residual_contract(self, rng):
        for _ in range(50):
            p = int(rng.integers(1, 9))
            M = rng.normal(size=(p, p))
            A = M @ M.T + np.eye(p)
            b = rng.normal(size=p)
            x = solve_symmetric(A, b)
            assert np.max(np.abs(A @ x - b)) <= 1e-9 * (1 + np.max(np.abs(b)))

    def test_singular_raises(self):
        with pytest.raises(SingularMatrixError):
            solve_symmetric([[1.0, 1.0], [1.0, 1.0]], [1.0, 1.0])

    def test_asymmetric_raises(self):
        with pytest.raises(SingularMatrixError):
            solve_symmetric([[1.0, 0.5], [0.0, 1.0]], [1.0, 1.0])


class TestConditionNumber:
    def test_small_matrix_paths_match_svd(self, rng):
        for shape in [(1, 1), (2, 2)]:
            for _ in range(20):
                M = rng.normal(size=shape)
                svals = np.linalg.svd(M, compute_uv=False)
                expected = svals[0] / svals[-1]
                assert condition_number(M) == pytest.approx(expected, rel=1e-8)

    def test_larger_matrices(self, rng):
        M = rng.normal(size=(5, 5))
        svals = np.linalg.svd(M, compute_uv=False)
        assert condition_number(M) == pytest.approx(svals[0] / svals[-1], rel=1e-10)
