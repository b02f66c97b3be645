"""Samplers for the clean models, the outlier laws and the contamination mixers.

Multivariate "standard Cauchy" and "standard Gumbel" outliers are drawn
independently per coordinate.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import expit

from .core_math import RngStream, as_matrix, as_vector
from .errors import InvalidInputError


# --- radial laws for elliptical distributions -------------------------------

@dataclass(frozen=True)
class ChiP:
    """Norm of a standard Gaussian in R^p; nests the Gaussian in the elliptical family."""
    p: int


@dataclass(frozen=True)
class Scaled:
    base: "ChiP | Scaled"
    c: float

    def __post_init__(self):
        if not self.c > 0:
            raise InvalidInputError("Scaled xi needs c > 0")


XiSpec = ChiP | Scaled


def sample_xi(xi: XiSpec, n: int, rng: RngStream) -> np.ndarray:
    if isinstance(xi, ChiP):
        return np.sqrt(rng.chisquare(xi.p, n))
    if isinstance(xi, Scaled):
        return xi.c * sample_xi(xi.base, n, rng)
    raise InvalidInputError(f"unknown xi spec {xi!r}")


@lru_cache(maxsize=64)
def xi_normalization_integral(xi: XiSpec, p: int, draws: int = 1_000_000) -> float:
    """Monte-Carlo value of ``E[sigmoid'(S)]`` for ``S = v^T xi U``.

    ``S`` is the one-dimensional projection of an elliptical draw with
    identity scatter. Cached per ``(xi, p)``; the draws come from a fixed
    stream.
    """
    rng = RngStream(0xE11, p)
    r = sample_xi(xi, draws, rng)
    z = rng.normal((draws, p))
    s = r * z[:, 0] / np.linalg.norm(z, axis=1)
    sig = expit(s)
    return float(np.mean(sig * (1.0 - sig)))


# --- distribution specs -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StdGaussian:
    p: int

    @property
    def dim(self) -> int:
        return self.p


@dataclass(frozen=True, eq=False)
class Gaussian:
    """``mean + cov_factor @ z`` with ``z ~ N(0, I)``."""
    mean: np.ndarray
    cov_factor: np.ndarray

    def __post_init__(self):
        mean = as_vector(self.mean, "mean")
        factor = np.asarray(self.cov_factor, dtype=np.float64)
        if factor.ndim != 2 or factor.shape[0] != mean.size:
            raise InvalidInputError("cov_factor rows must equal the mean dimension")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov_factor", factor)

    @property
    def dim(self) -> int:
        return self.mean.size


@dataclass(frozen=True, eq=False)
class IsoCauchy:
    p: int

    @property
    def dim(self) -> int:
        return self.p


@dataclass(frozen=True, eq=False)
class AbsCauchy:
    """Coordinatewise absolute value of standard Cauchy draws."""
    p: int

    @property
    def dim(self) -> int:
        return self.p


@dataclass(frozen=True, eq=False)
class IsoGumbel:
    p: int

    @property
    def dim(self) -> int:
        return self.p


@dataclass(frozen=True, eq=False)
class SphereUniform:
    p: int

    @property
    def dim(self) -> int:
        return self.p


@dataclass(frozen=True, eq=False)
class Elliptical:
    """``theta + xi * A @ U`` with ``U`` uniform on the unit sphere."""
    theta: np.ndarray
    xi: XiSpec
    A: np.ndarray

    def __post_init__(self):
        theta = as_vector(self.theta, "theta")
        A = as_matrix(self.A, "A")
        if A.shape != (theta.size, theta.size):
            raise InvalidInputError("A must be square with the dimension of theta")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "A", A)

    @property
    def dim(self) -> int:
        return self.theta.size


DistributionSpec = StdGaussian | Gaussian | IsoCauchy | AbsCauchy | IsoGumbel | SphereUniform | Elliptical


def _check_n(n: int) -> None:
    if int(n) < 1:
        raise InvalidInputError(f"n must be positive, got {n}")


def sphere_uniform(n: int, p: int, rng: RngStream) -> np.ndarray:
    z = rng.normal((n, p))
    nrm = np.linalg.norm(z, axis=1, keepdims=True)
    return z / nrm


def sample(spec: DistributionSpec, n: int, rng: RngStream) -> np.ndarray:
    """Draw ``n`` i.i.d. rows from ``spec``."""
    _check_n(n)
    if isinstance(spec, StdGaussian):
        return rng.normal((n, spec.p))
    if isinstance(spec, Gaussian):
        z = rng.normal((n, spec.cov_factor.shape[1]))
        return spec.mean + z @ spec.cov_factor.T
    if isinstance(spec, IsoCauchy):
        return np.tan(np.pi * (rng.uniform((n, spec.p)) - 0.5))
    if isinstance(spec, AbsCauchy):
        return np.abs(np.tan(np.pi * (rng.uniform((n, spec.p)) - 0.5)))
    if isinstance(spec, IsoGumbel):
        u = rng.uniform((n, spec.p))
        # uniform draws are in [0, 1); keep away from 0 for the inner log
        u = np.where(u == 0.0, np.finfo(float).tiny, u)
        return -np.log(-np.log(u))
    if isinstance(spec, SphereUniform):
        return sphere_uniform(n, spec.p, rng)
    if isinstance(spec, Elliptical):
        u = sphere_uniform(n, spec.dim, rng)
        r = sample_xi(spec.xi, n, rng)
        return spec.theta + r[:, None] * (u @ spec.A.T)
    raise InvalidInputError(f"unknown distribution spec {spec!r}")


# --- contamination ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Mixture:
    """Rows from ``base`` w.p. ``1 - alpha`` and from ``outlier`` w.p. ``alpha``."""
    base: DistributionSpec
    outlier: DistributionSpec
    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidInputError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.base.dim != self.outlier.dim:
            raise InvalidInputError("base and outlier dimensions differ")

    @property
    def dim(self) -> int:
        return self.base.dim


@dataclass(frozen=True, eq=False)
class DeterministicShift:
    """Every base draw moved by ``delta``; the W1 distance to the base is at most ``|delta|``."""
    base: DistributionSpec
    delta: np.ndarray

    def __post_init__(self):
        delta = as_vector(self.delta, "delta")
        if delta.size != self.base.dim:
            raise InvalidInputError("delta dimension differs from the base")
        object.__setattr__(self, "delta", delta)

    @property
    def dim(self) -> int:
        return self.base.dim


ContaminationSpec = Mixture | DeterministicShift


def sample_contaminated(spec: ContaminationSpec, n: int, rng: RngStream, *, return_mask: bool = False):
    """Draw ``n`` rows from a contamination model.

    With ``return_mask=True`` also returns the boolean outlier indicator.
    ``alpha`` of exactly 0 or 1 consumes the stream exactly as a plain
    :func:`sample` call on the base or outlier law would.
    """
    _check_n(n)
    if isinstance(spec, DeterministicShift):
        X = sample(spec.base, n, rng) + spec.delta
        mask = np.zeros(n, dtype=bool)
    elif isinstance(spec, Mixture):
        if spec.alpha == 0.0:
            X, mask = sample(spec.base, n, rng), np.zeros(n, dtype=bool)
        elif spec.alpha == 1.0:
            X, mask = sample(spec.outlier, n, rng), np.ones(n, dtype=bool)
        else:
            X = sample(spec.base, n, rng)
            out = sample(spec.outlier, n, rng)
            mask = rng.uniform(n) < spec.alpha
            X[mask] = out[mask]
    else:
        raise InvalidInputError(f"unknown contamination spec {spec!r}")
    return (X, mask) if return_mask else X


def preset_model(name: str, p: int, theta=None, alpha: float = 0.1) -> Mixture:
    """The three location/covariance perturbation models.

    M1 mixes in i.i.d. standard Cauchy coordinates, M2 a Gaussian centred at
    ``2 * ones(p)`` and M3 i.i.d. standard Gumbel coordinates, each with
    weight ``alpha`` (0.1 by default) against ``N(theta, I)``.
    """
    theta = np.zeros(p) if theta is None else as_vector(theta, "theta")
    if theta.size != p:
        raise InvalidInputError(f"theta has dimension {theta.size}, expected {p}")
    base = Gaussian(theta, np.eye(p))
    if name == "M1":
        outlier = IsoCauchy(p)
    elif name == "M2":
        outlier = Gaussian(2.0 * np.ones(p), np.eye(p))
    elif name == "M3":
        outlier = IsoGumbel(p)
    else:
        raise InvalidInputError(f"unknown preset model {name!r}; expected M1, M2 or M3")
    return Mixture(base, outlier, alpha)


# --- regression data ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RegressionSpec:
    """``Y = X^T beta + N(0, noise_scale^2)`` w.p. ``1 - alpha``, else an outlier response.

    An outlier row draws ``Y`` from ``noise_outlier`` alone; with
    ``additive_outlier=True`` the draw is added to ``X^T beta`` instead.
    ``noise_scale=0`` switches off the clean noise (used by tests).
    """
    beta: np.ndarray
    x_dist: DistributionSpec
    noise_outlier: DistributionSpec = field(default_factory=lambda: AbsCauchy(1))
    alpha: float = 0.2
    noise_scale: float = 1.0
    additive_outlier: bool = False

    def __post_init__(self):
        beta = as_vector(self.beta, "beta")
        if beta.size != self.x_dist.dim:
            raise InvalidInputError("beta dimension differs from the design dimension")
        if self.noise_outlier.dim != 1:
            raise InvalidInputError("noise outlier law must be one-dimensional")
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidInputError(f"alpha must lie in [0, 1], got {self.alpha}")
        object.__setattr__(self, "beta", beta)

    @property
    def dim(self) -> int:
        return self.beta.size + 1


def sample_regression(spec: RegressionSpec, n: int, rng: RngStream) -> np.ndarray:
    """``n`` rows of ``(X, Y)``; the last column is the response."""
    _check_n(n)
    X = sample(spec.x_dist, n, rng)
    mean = X @ spec.beta
    y = mean + spec.noise_scale * rng.normal(n)
    if spec.alpha > 0.0:
        out = sample(spec.noise_outlier, n, rng)[:, 0]
        if spec.additive_outlier:
            out = out + mean
        mask = rng.uniform(n) < spec.alpha
        y = np.where(mask, out, y)
    return np.column_stack([X, y])


def reference_beta(p: int) -> np.ndarray:
    """``(-0.05, -0.05, 0, 0.05, 0.05)`` tiled to length ``p`` (``p`` a multiple of 5)."""
    if p % 5:
        raise InvalidInputError(f"p must be a multiple of 5, got {p}")
    return np.tile([-0.05, -0.05, 0.0, 0.05, 0.05], p // 5)


def regression_model(p: int, alpha: float = 0.2, beta=None) -> RegressionSpec:
    """Gaussian design with ``alpha``-weighted ``|Cauchy|`` response noise."""
    beta = reference_beta(p) if beta is None else beta
    return RegressionSpec(beta=beta, x_dist=StdGaussian(p), noise_outlier=AbsCauchy(1), alpha=alpha)
