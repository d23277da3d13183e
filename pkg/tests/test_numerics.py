"""Kernel contracts: eigensolve, singular values, solves, and their invariants."""

import numpy as np
import pytest

from specexact import numerics
from specexact.errors import DataError, DimensionError, SingularMatrixError


def random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a + a.conj().T


class TestEigDense:
    def test_symmetric_2x2(self):
        d = numerics.eig_dense([[0, 2], [2, 0]])
        np.testing.assert_allclose(d.eigenvalues, [-2, 2], atol=1e-12)

    def test_identity_is_one_cluster(self):
        d = numerics.eig_dense(np.eye(3))
        np.testing.assert_allclose(d.eigenvalues, [1, 1, 1], atol=1e-14)
        assert [c.size for c in d.clusters] == [3]

    def test_nilpotent_jordan_block(self):
        d = numerics.eig_dense([[0, 1], [0, 0]])
        np.testing.assert_allclose(d.eigenvalues, [0, 0], atol=1e-12)
        assert [c.size for c in d.clusters] == [2]

    def test_residual_invariant_random(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            n = int(rng.integers(2, 20))
            m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            d = numerics.eig_dense(m)
            scale = numerics.op_norm(m)
            assert np.all(d.residuals <= 1e-8 * scale)

    def test_hermitian_eigenvalues_real(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            m = random_hermitian(rng, int(rng.integers(2, 25)))
            d = numerics.eig_dense(m)
            assert np.max(np.abs(d.eigenvalues.imag)) <= 1e-10 * numerics.op_norm(m)

    def test_conjugate_transpose_spectrum(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            n = int(rng.integers(2, 15))
            m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            w1 = numerics.eig_dense(m).eigenvalues
            w2 = numerics.eig_dense(m.conj().T).eigenvalues
            # conjugated set must match the original set
            w2c = np.sort_complex(np.conj(w2))
            np.testing.assert_allclose(np.sort_complex(w1), w2c, atol=1e-8 * numerics.op_norm(m))

    def test_cluster_sizes_sum_to_dimension(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            n = int(rng.integers(1, 30))
            d = numerics.eig_dense(rng.standard_normal((n, n)))
            assert sum(c.size for c in d.clusters) == n

    def test_non_square_raises(self):
        with pytest.raises(DimensionError):
            numerics.eig_dense(np.ones((2, 3)))

    def test_nan_rejected(self):
        with pytest.raises(DataError):
            numerics.eig_dense([[np.nan, 0], [0, 1]])


class TestSigmaMin:
    def test_identity(self):
        assert numerics.sigma_min(np.eye(4)) == pytest.approx(1.0, abs=1e-14)

    def test_antidiagonal(self):
        assert numerics.sigma_min([[0, 2], [2, 0]]) == pytest.approx(2.0, abs=1e-14)

    def test_diagonal(self):
        assert numerics.sigma_min(np.diag([1.0, 10.0])) == pytest.approx(1.0, abs=1e-14)

    def test_agrees_with_eigen_distance_hermitian(self):
        # sigma_min(M - lam I) == min_j |lam - lam_j| for Hermitian M
        rng = np.random.default_rng(17)
        for _ in range(100):
            m = random_hermitian(rng, int(rng.integers(2, 31)))
            w = np.linalg.eigvalsh(m)
            lam = complex(rng.standard_normal(), rng.standard_normal()) * np.abs(w).max()
            got = numerics.sigma_min(m - lam * np.eye(m.shape[0]))
            want = np.min(np.abs(w - lam))
            assert got == pytest.approx(want, rel=1e-8)

    def test_lower_bounds_vector_images(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            n = int(rng.integers(2, 12))
            m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            s = numerics.sigma_min(m)
            for _ in range(50):
                x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
                x /= np.linalg.norm(x)
                assert s <= np.linalg.norm(m @ x) + 1e-12

    def test_tridiagonal_fast_path_matches_svd(self):
        rng = np.random.default_rng(29)
        for _ in range(20):
            n = int(rng.integers(3, 40))
            main = rng.standard_normal(n)
            off = rng.standard_normal(n - 1)
            m = np.diag(main) + np.diag(off, 1) + np.diag(off, -1)
            dense = float(np.linalg.svd(m, compute_uv=False)[-1])
            assert numerics.sigma_min(m) == pytest.approx(dense, rel=1e-10, abs=1e-12)

    def test_exactly_singular_diag_returns_zero(self):
        assert numerics.sigma_min(np.diag([0.0, 1.0, 2.0])) == 0.0


class TestOpNorm:
    def test_diagonal(self):
        assert numerics.op_norm(np.diag([3.0, 1.0])) == pytest.approx(3.0, abs=1e-14)

    def test_zero(self):
        assert numerics.op_norm(np.zeros((3, 2))) == 0.0

    def test_rank_one(self):
        assert numerics.op_norm([[0, 5], [0, 0]]) == pytest.approx(5.0, abs=1e-14)

    def test_rectangular(self):
        m = np.array([[1.0, 0.0, 0.0], [0.0, 2.0, 0.0]])
        assert numerics.op_norm(m) == pytest.approx(2.0, abs=1e-14)


class TestSolve:
    def test_identity(self):
        b = np.arange(6.0).reshape(3, 2)
        np.testing.assert_array_equal(numerics.solve(np.eye(3), b), b)

    def test_diagonal_inverse(self):
        x = numerics.solve(np.diag([2.0, 4.0]), np.eye(2))
        np.testing.assert_allclose(x, np.diag([0.5, 0.25]), atol=1e-15)

    def test_permutation_scaled_inverse(self):
        x = numerics.solve([[0.0, 2.0], [2.0, 0.0]], np.eye(2))
        np.testing.assert_allclose(x, [[0.0, 0.5], [0.5, 0.0]], atol=1e-15)

    def test_roundtrip_random(self):
        rng = np.random.default_rng(31)
        for _ in range(25):
            n = int(rng.integers(2, 25))
            m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            b = rng.standard_normal((n, 3)) + 1j * rng.standard_normal((n, 3))
            x = numerics.solve(m, b)
            err = np.linalg.norm(m @ x - b)
            assert err <= 1e-9 * numerics.op_norm(m) * max(np.linalg.norm(b), 1.0)

    def test_singular_raises_with_pivot(self):
        with pytest.raises(SingularMatrixError) as exc:
            numerics.solve([[1.0, 1.0], [1.0, 1.0]], np.eye(2))
        assert exc.value.pivot < 1e-14

    def test_vector_rhs(self):
        x = numerics.solve(np.diag([2.0, 4.0]), np.array([2.0, 4.0]))
        np.testing.assert_allclose(x, [1.0, 1.0])

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            numerics.solve(np.eye(2), np.ones((3, 1)))
