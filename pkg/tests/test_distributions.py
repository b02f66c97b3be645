import numpy as np
import pytest

from wgan_robust import distributions as D
from wgan_robust.core_math import RngStream
from wgan_robust.errors import InvalidInputError


def test_degenerate_gaussian():
    m = np.array([1.0, -2.0])
    X = D.sample(D.Gaussian(m, np.zeros((2, 2))), 3, RngStream(0, 0))
    assert np.array_equal(X, np.tile(m, (3, 1)))


def test_sphere_rows_unit_norm():
    X = D.sample(D.SphereUniform(5), 200, RngStream(0, 1))
    assert np.allclose(np.linalg.norm(X, axis=1), 1.0, atol=1e-12)


def test_std_gaussian_moments():
    X = D.sample(D.StdGaussian(10), 100_000, RngStream(0, 2))
    assert np.all(np.abs(X.mean(axis=0)) < 0.02)
    assert np.all(np.abs(X.var(axis=0) - 1.0) < 0.05)


def test_gaussian_covariance_factor():
    A = np.array([[2.0, 0.0], [1.0, 0.5]])
    X = D.sample(D.Gaussian(np.zeros(2), A), 200_000, RngStream(0, 3))
    assert np.allclose(np.cov(X.T), A @ A.T, atol=0.05)


def test_elliptical_chi_is_gaussian():
    # chi_p radius times a uniform direction is standard normal
    X = D.sample(D.Elliptical(np.zeros(4), D.ChiP(4), np.eye(4)), 100_000, RngStream(0, 4))
    assert np.allclose(np.cov(X.T), np.eye(4), atol=0.03)
    assert np.all(np.abs(X.mean(axis=0)) < 0.02)


def test_gumbel_mean():
    X = D.sample(D.IsoGumbel(1), 100_000, RngStream(0, 5))
    assert X.mean() == pytest.approx(np.euler_gamma, abs=0.02)


def test_cauchy_median():
    X = D.sample(D.IsoCauchy(1), 100_000, RngStream(0, 6))
    assert abs(np.median(X)) < 0.02
    assert np.median(np.abs(X)) == pytest.approx(1.0, abs=0.03)


def test_abs_cauchy_nonnegative():
    assert np.all(D.sample(D.AbsCauchy(1), 1000, RngStream(0, 7)) >= 0.0)


def test_zero_n_rejected():
    with pytest.raises(InvalidInputError):
        D.sample(D.StdGaussian(2), 0, RngStream(0, 0))


class TestContamination:
    def test_alpha_zero_matches_base(self):
        base = D.StdGaussian(3)
        a = D.sample_contaminated(D.Mixture(base, D.IsoCauchy(3), 0.0), 50, RngStream(1, 1))
        b = D.sample(base, 50, RngStream(1, 1))
        assert np.array_equal(a, b)

    def test_shift_coupling(self):
        delta = np.array([0.5, -1.0, 2.0])
        a = D.sample_contaminated(D.DeterministicShift(D.StdGaussian(3), delta), 4, RngStream(2, 2))
        b = D.sample(D.StdGaussian(3), 4, RngStream(2, 2))
        assert np.array_equal(a, b + delta)

    def test_outlier_count(self):
        n = 100_000
        _, mask = D.sample_contaminated(D.preset_model("M2", 2), n, RngStream(3, 3), return_mask=True)
        assert abs(mask.sum() - 0.1 * n) < 3 * np.sqrt(n * 0.1 * 0.9)

    def test_mask_marks_outliers(self):
        X, mask = D.sample_contaminated(D.preset_model("M2", 3, alpha=0.3), 20_000, RngStream(4, 4), return_mask=True)
        assert np.allclose(X[mask].mean(axis=0), 2.0, atol=0.05)
        assert np.allclose(X[~mask].mean(axis=0), 0.0, atol=0.05)

    def test_preset_m2_mean(self):
        spec = D.preset_model("M2", 2, theta=np.zeros(2))
        assert np.array_equal(spec.outlier.mean, [2.0, 2.0])

    def test_preset_theta(self):
        spec = D.preset_model("M1", 2, theta=np.array([1.0, 1.0]))
        X, mask = D.sample_contaminated(spec, 20_000, RngStream(5, 5), return_mask=True)
        assert np.allclose(X[~mask].mean(axis=0), 1.0, atol=0.05)

    def test_unknown_model(self):
        with pytest.raises(InvalidInputError):
            D.preset_model("M9", 2)

    def test_bad_alpha(self):
        with pytest.raises(InvalidInputError):
            D.Mixture(D.StdGaussian(2), D.StdGaussian(2), 1.5)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            D.Mixture(D.StdGaussian(2), D.StdGaussian(3), 0.1)


class TestRegression:
    def test_pure_noise_uncorrelated(self):
        spec = D.RegressionSpec(np.zeros(3), D.StdGaussian(3), alpha=0.0)
        Z = D.sample_regression(spec, 100_000, RngStream(6, 6))
        corr = np.corrcoef(Z.T)[-1, :-1]
        assert np.all(np.abs(corr) < 0.02)
        assert Z[:, -1].var() == pytest.approx(1.0, abs=0.02)

    def test_noiseless(self):
        spec = D.RegressionSpec(np.array([1.0, 0.0, 0.0]), D.StdGaussian(3), alpha=0.0, noise_scale=0.0)
        Z = D.sample_regression(spec, 50, RngStream(7, 7))
        assert np.array_equal(Z[:, -1], Z[:, 0])

    def test_beta_norm(self):
        beta = D.reference_beta(10)
        assert beta.size == 10
        assert np.count_nonzero(beta) == 8
        assert np.linalg.norm(beta) == pytest.approx(0.05 * np.sqrt(8), abs=1e-15)

    def test_beta_needs_multiple_of_five(self):
        with pytest.raises(InvalidInputError):
            D.reference_beta(12)

    def test_outlier_response_ignores_design(self):
        spec = D.regression_model(5, alpha=1.0)
        Z = D.sample_regression(spec, 1000, RngStream(8, 8))
        assert np.all(Z[:, -1] >= 0)
        ref = D.sample(D.AbsCauchy(1), 1000, RngStream(0, 0))
        assert np.median(Z[:, -1]) == pytest.approx(np.median(ref), abs=0.15)

    def test_additive_outlier(self):
        spec = D.RegressionSpec(np.ones(5), D.StdGaussian(5), alpha=1.0, additive_outlier=True)
        Z = D.sample_regression(spec, 1000, RngStream(8, 9))
        assert np.all(Z[:, -1] - Z[:, :-1].sum(axis=1) >= -1e-12)

    def test_mixture_weight(self):
        spec = D.RegressionSpec(np.zeros(2), D.StdGaussian(2), alpha=0.3, noise_scale=0.0)
        Z = D.sample_regression(spec, 100_000, RngStream(8, 10))
        n_out = np.count_nonzero(Z[:, -1])
        assert abs(n_out - 30_000) < 3 * np.sqrt(100_000 * 0.21)


def test_xi_scaled():
    r = D.sample_xi(D.Scaled(D.ChiP(3), 2.0), 50_000, RngStream(9, 9))
    assert np.mean(r ** 2) == pytest.approx(12.0, rel=0.02)


def test_xi_normalization_integral_bounded():
    val = D.xi_normalization_integral(D.ChiP(3), 3, draws=20_000)
    assert 0.0 < val <= 0.25
