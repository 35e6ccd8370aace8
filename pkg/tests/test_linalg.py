"""Truncated SVD, pseudoinverse least squares, balanced factor pairs.

Expected truncation ranks are derived from a full SVD computed in the
test itself (cumulative tail-energy rule), never from the function
under test.
"""

import numpy as np
import pytest

from tring.linalg import balanced_factor_pair, least_squares_rhs, truncated_svd


def rank_oracle(a, delta):
    s = np.linalg.svd(a, compute_uv=False)
    for r in range(1, s.size + 1):
        if np.sqrt(np.sum(s[r:] ** 2)) <= delta:
            return r
    return s.size


class TestTruncatedSVD:
    def test_identity_keeps_everything(self):
        res = truncated_svd(np.eye(3), 0.0)
        assert res.rank == 3
        assert np.allclose(res.S, [1.0, 1.0, 1.0])
        assert res.residual_fro == 0.0

    def test_rank_one_outer_product(self):
        x = np.array([1.0, 2.0])
        y = np.array([3.0, 4.0, 5.0])
        res = truncated_svd(np.outer(x, y), 1e-8)
        assert res.rank == 1
        approx = res.U * res.S @ res.V.T
        assert np.allclose(approx, np.outer(x, y), atol=1e-12)

    def test_delta_at_third_singular_value(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal((4, 4))
        s = np.linalg.svd(a, compute_uv=False)
        delta = s[3] * 1.0000001  # tail {s4} fits, {s3, s4} does not
        res = truncated_svd(a, delta)
        assert res.rank == rank_oracle(a, delta)
        assert res.rank == 3

    @pytest.mark.parametrize("seed", range(8))
    @pytest.mark.parametrize("frac", [0.0, 0.01, 0.1, 0.5, 0.99])
    def test_rank_matches_tail_rule_oracle(self, seed, frac):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((6, 9))
        delta = frac * np.linalg.norm(a)
        res = truncated_svd(a, delta)
        assert res.rank == rank_oracle(a, delta)

    def test_residual_equals_discarded_tail(self):
        rng = np.random.default_rng(1)
        a = rng.standard_normal((5, 7))
        s = np.linalg.svd(a, compute_uv=False)
        delta = 0.3 * np.linalg.norm(a)
        res = truncated_svd(a, delta)
        expected = np.sqrt(np.sum(s[res.rank:] ** 2))
        assert res.residual_fro == pytest.approx(expected, rel=1e-12)
        approx = res.U * res.S @ res.V.T
        assert np.linalg.norm(a - approx) == pytest.approx(res.residual_fro, rel=1e-10, abs=1e-12)

    def test_orthonormal_factors(self):
        rng = np.random.default_rng(2)
        a = rng.standard_normal((6, 4))
        res = truncated_svd(a, 0.05 * np.linalg.norm(a))
        assert np.allclose(res.U.T @ res.U, np.eye(res.rank), atol=1e-10)
        assert np.allclose(res.V.T @ res.V, np.eye(res.rank), atol=1e-10)
        assert np.all(np.diff(res.S) <= 1e-15)

    def test_sign_convention(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((5, 5))
        res = truncated_svd(a, 0.0)
        for j in range(res.rank):
            col = res.U[:, j]
            assert col[np.argmax(np.abs(col))] >= 0.0

    def test_huge_delta_keeps_dominant_triple(self):
        rng = np.random.default_rng(4)
        a = rng.standard_normal((4, 6))
        s = np.linalg.svd(a, compute_uv=False)
        res = truncated_svd(a, 10.0 * np.linalg.norm(a))
        assert res.rank == 1
        assert res.S[0] == pytest.approx(s[0], rel=1e-12)

    def test_zero_delta_reconstructs(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((5, 5))
        res = truncated_svd(a, 0.0)
        approx = res.U * res.S @ res.V.T
        assert np.linalg.norm(a - approx) <= 1e-10 * np.linalg.norm(a)

    def test_max_rank_cap(self):
        rng = np.random.default_rng(6)
        a = rng.standard_normal((6, 6))
        res = truncated_svd(a, 0.0, max_rank=2)
        assert res.rank == 2
        s = np.linalg.svd(a, compute_uv=False)
        assert res.residual_fro == pytest.approx(np.sqrt(np.sum(s[2:] ** 2)), rel=1e-12)

    def test_non_finite_rejected(self):
        a = np.array([[1.0, np.nan], [0.0, 1.0]])
        with pytest.raises(FloatingPointError):
            truncated_svd(a, 0.1)
        a = np.array([[1.0, np.inf], [0.0, 1.0]])
        with pytest.raises(FloatingPointError):
            truncated_svd(a, 0.1)

    def test_negative_delta_rejected(self):
        with pytest.raises(ValueError):
            truncated_svd(np.eye(2), -1e-3)

    def test_deterministic_across_calls(self):
        rng = np.random.default_rng(7)
        a = rng.standard_normal((8, 5))
        r1 = truncated_svd(a, 0.2 * np.linalg.norm(a))
        r2 = truncated_svd(a, 0.2 * np.linalg.norm(a))
        assert r1.U.tobytes() == r2.U.tobytes()
        assert r1.S.tobytes() == r2.S.tobytes()
        assert r1.V.tobytes() == r2.V.tobytes()


class TestLeastSquaresRHS:
    def test_identity_design(self):
        rng = np.random.default_rng(10)
        t = rng.standard_normal((4, 3))
        x = least_squares_rhs(t, np.eye(3))
        assert np.allclose(x, t, atol=1e-12)

    def test_orthonormal_design(self):
        rng = np.random.default_rng(11)
        q, _ = np.linalg.qr(rng.standard_normal((6, 3)))
        t = rng.standard_normal((5, 6))
        x = least_squares_rhs(t, q)
        assert np.allclose(x, t @ q, atol=1e-12)

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_normal_equations_oracle(self, seed):
        rng = np.random.default_rng(seed)
        b = rng.standard_normal((12, 4))
        t = rng.standard_normal((5, 12))
        x = least_squares_rhs(t, b)
        oracle = np.linalg.solve(b.T @ b, b.T @ t.T).T
        assert np.linalg.norm(x - oracle) <= 1e-9 * max(1.0, np.linalg.norm(oracle))

    def test_residual_orthogonal_to_column_space(self):
        rng = np.random.default_rng(20)
        b = rng.standard_normal((10, 3))
        t = rng.standard_normal((4, 10))
        x = least_squares_rhs(t, b)
        resid = t - x @ b.T
        assert np.linalg.norm(resid @ b) <= 1e-8 * np.linalg.norm(t)

    def test_rank_deficient_gives_minimum_norm(self):
        rng = np.random.default_rng(21)
        col = rng.standard_normal((8, 1))
        b = np.hstack([col, col])  # rank 1
        t = rng.standard_normal((3, 8))
        x = least_squares_rhs(t, b)
        assert np.all(np.isfinite(x))
        # minimum-norm solution splits weight evenly across duplicate columns
        assert np.allclose(x[:, 0], x[:, 1], atol=1e-10)

    def test_zero_design(self):
        t = np.ones((2, 3))
        x = least_squares_rhs(t, np.zeros((3, 2)))
        assert np.array_equal(x, np.zeros((2, 2)))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            least_squares_rhs(np.ones((2, 3)), np.ones((4, 2)))


def divisor_pair_oracle(r):
    best = None
    for a in range(1, r + 1):
        if r % a == 0:
            b = r // a
            if a <= b and (best is None or b - a < best[1] - best[0]):
                best = (a, b)
    return best


class TestBalancedFactorPair:
    def test_square(self):
        assert balanced_factor_pair(16) == (4, 4)

    def test_composite(self):
        assert balanced_factor_pair(12) == (3, 4)

    def test_prime(self):
        assert balanced_factor_pair(7) == (1, 7)

    def test_one(self):
        assert balanced_factor_pair(1) == (1, 1)

    def test_sweep_against_divisor_enumeration(self):
        for r in range(1, 201):
            r1, r2 = balanced_factor_pair(r)
            assert r1 * r2 == r and r1 <= r2
            assert (r1, r2) == divisor_pair_oracle(r)

    def test_rejects_non_positive(self):
        with pytest.raises(ValueError):
            balanced_factor_pair(0)
