import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wgan_robust import core_math as cm
from wgan_robust.errors import InvalidInputError, NotPositiveDefiniteError


def random_spd(rng, p):
    M = rng.normal((p, p))
    return M @ M.T + 0.1 * np.eye(p)


def random_sym(rng, p):
    M = rng.normal((p, p))
    return 0.5 * (M + M.T)


class TestRngStream:
    def test_same_key_same_draws(self):
        a, b = cm.RngStream(7, 3), cm.RngStream(7, 3)
        assert np.array_equal(a.normal(10), b.normal(10))

    def test_streams_differ(self):
        assert not np.array_equal(cm.RngStream(7, 3).normal(10), cm.RngStream(7, 4).normal(10))
        assert not np.array_equal(cm.RngStream(7, 3).normal(10), cm.RngStream(8, 3).normal(10))

    def test_unit_vector(self):
        v = cm.RngStream(0, 0).unit_vector(6)
        assert v.shape == (6,)
        assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)


class TestSpectralNorm:
    def test_identity(self):
        assert cm.spectral_norm(np.eye(3)) == pytest.approx(1.0, abs=1e-12)

    def test_diagonal(self):
        assert cm.spectral_norm(np.diag([3.0, 1.0, 0.5])) == pytest.approx(3.0, abs=1e-9)

    def test_symmetric_matches_jacobi(self):
        rng = cm.RngStream(1, 0)
        for _ in range(5):
            S = random_sym(rng, 5)
            w, _ = cm.jacobi_eigh(S)
            assert cm.spectral_norm(S) == pytest.approx(np.max(np.abs(w)), abs=1e-8)

    def test_rectangular_matches_svd(self):
        M = cm.RngStream(2, 0).normal((4, 7))
        assert cm.spectral_norm(M) == pytest.approx(np.linalg.svd(M, compute_uv=False)[0], rel=1e-8)

    def test_zero_matrix(self):
        assert cm.spectral_norm(np.zeros((3, 3))) == 0.0

    def test_info(self):
        info = cm.spectral_norm(np.diag([2.0, 1.0]), return_info=True)
        assert info.converged and info.value == pytest.approx(2.0)

    def test_rejects_nonfinite(self):
        with pytest.raises(InvalidInputError):
            cm.spectral_norm(np.array([[1.0, np.nan], [0.0, 1.0]]))


class TestJacobi:
    @pytest.mark.parametrize("p", [1, 2, 5, 12])
    def test_matches_lapack(self, p):
        S = random_sym(cm.RngStream(p, 1), p)
        w, V = cm.jacobi_eigh(S)
        assert np.allclose(w, np.linalg.eigvalsh(S), atol=1e-12)
        assert np.allclose(V @ np.diag(w) @ V.T, S, atol=1e-12)
        assert np.allclose(V.T @ V, np.eye(p), atol=1e-12)

    def test_rejects_asymmetric(self):
        with pytest.raises(InvalidInputError):
            cm.jacobi_eigh(np.array([[1.0, 2.0], [0.0, 1.0]]))


class TestCholesky:
    def test_identity(self):
        assert np.array_equal(cm.cholesky(np.eye(4)), np.eye(4))

    def test_hand_example(self):
        assert np.allclose(cm.cholesky(np.array([[4.0, 2.0], [2.0, 5.0]])), [[2.0, 0.0], [1.0, 2.0]], atol=1e-15)

    def test_not_pd(self):
        with pytest.raises(NotPositiveDefiniteError) as exc:
            cm.cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))
        assert exc.value.pivot == 1

    def test_random_reconstructs(self):
        S = random_spd(cm.RngStream(3, 0), 6)
        L = cm.cholesky(S)
        assert np.allclose(np.triu(L, 1), 0.0)
        assert np.allclose(L @ L.T, S, atol=1e-12)
        assert np.allclose(L, np.linalg.cholesky(S), atol=1e-12)


class TestEigenClamp:
    def test_in_range_unchanged(self):
        S = np.array([[1.0, 0.2], [0.2, 1.5]])
        assert np.allclose(cm.eigen_clamp(S, 0.5, 2.0), S, atol=1e-10)

    def test_diagonal(self):
        assert np.allclose(cm.eigen_clamp(np.diag([5.0, 0.1]), 0.5, 2.0), np.diag([2.0, 0.5]), atol=1e-12)

    def test_random_in_range(self):
        rng = cm.RngStream(4, 0)
        for _ in range(10):
            out = cm.eigen_clamp(random_sym(rng, 4) * 3, 0.5, 2.0)
            w, _ = cm.jacobi_eigh(out)
            assert w.min() >= 0.5 - 1e-12 and w.max() <= 2.0 + 1e-12

    def test_bad_interval(self):
        with pytest.raises(InvalidInputError):
            cm.eigen_clamp(np.eye(2), 2.0, 1.0)


def test_sym_sqrt():
    S = random_spd(cm.RngStream(5, 0), 5)
    R = cm.sym_sqrt(S)
    assert np.allclose(R, R.T)
    assert np.allclose(R @ R, S, atol=1e-10)


class TestTopK:
    def test_example(self):
        assert list(cm.top_k_indices(np.array([3.0, -1.0, 2.0]), 2)) == [0, 2]

    def test_ties_prefer_low_index(self):
        assert list(cm.top_k_indices(np.ones(5), 2)) == [0, 1]

    def test_uses_magnitude(self):
        assert list(cm.top_k_indices(np.array([1.0, -5.0, 2.0]), 1)) == [1]

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=8), st.integers(1, 8))
    def test_matches_sort_oracle(self, vals, k):
        v = np.array(vals)
        k = min(k, v.size)
        order = sorted(range(v.size), key=lambda i: (-abs(v[i]), i))
        assert list(cm.top_k_indices(v, k)) == sorted(order[:k])

    def test_bad_k(self):
        with pytest.raises(InvalidInputError):
            cm.top_k_indices(np.ones(3), 4)
