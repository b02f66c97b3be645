"""Parametric generators whose parameters are the estimates.

Each generator is a differentiable map from reference noise to samples:

* ``Location``:   ``theta + z``
* ``Covariance``: ``A z``                  (estimate ``A A^T``)
* ``Regression``: ``(x, x^T beta + z)``    with ``(x, z) ~ N(0, I_{p+1})``
* ``EllipticalLoc``: ``theta + xi A u``    with ``u`` uniform on the sphere

Noise is returned alongside the samples so that gradients can be pulled
back through the same draws.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core_math import RngStream, as_matrix, as_vector, eigen_clamp, sym_sqrt
from .distributions import ChiP, XiSpec, sample_xi, sphere_uniform
from .errors import InvalidInputError, InvalidStateError


@dataclass
class Location:
    theta: np.ndarray

    def __post_init__(self):
        self.theta = as_vector(self.theta, "theta").copy()

    @property
    def dim(self) -> int:
        return self.theta.size

    def params(self) -> dict[str, np.ndarray]:
        return {"theta": self.theta}


@dataclass
class Covariance:
    A: np.ndarray

    def __post_init__(self):
        self.A = as_matrix(self.A, "A").copy()
        if self.A.shape[0] != self.A.shape[1]:
            raise InvalidInputError("A must be square")

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    def params(self) -> dict[str, np.ndarray]:
        return {"A": self.A}


@dataclass
class Regression:
    beta: np.ndarray

    def __post_init__(self):
        self.beta = as_vector(self.beta, "beta").copy()

    @property
    def dim(self) -> int:
        return self.beta.size + 1

    def params(self) -> dict[str, np.ndarray]:
        return {"beta": self.beta}


@dataclass
class EllipticalLoc:
    """Elliptical generator; ``estimand`` selects 'location' (learn theta) or 'scatter' (theta frozen).

    With ``learn_A=False`` the scatter factor stays at its initial value
    (only meaningful for the location estimand).
    """

    theta: np.ndarray
    A: np.ndarray
    xi: XiSpec = None
    estimand: str = "location"
    learn_A: bool = True

    def __post_init__(self):
        self.theta = as_vector(self.theta, "theta").copy()
        self.A = as_matrix(self.A, "A").copy()
        if self.A.shape != (self.theta.size, self.theta.size):
            raise InvalidInputError("A must be square with the dimension of theta")
        if self.xi is None:
            self.xi = ChiP(self.theta.size)
        if self.estimand not in ("location", "scatter"):
            raise InvalidInputError(f"unknown estimand {self.estimand!r}")

    @property
    def dim(self) -> int:
        return self.theta.size

    def params(self) -> dict[str, np.ndarray]:
        if self.estimand == "scatter":
            return {"A": self.A}
        if not self.learn_A:
            return {"theta": self.theta}
        return {"theta": self.theta, "A": self.A}


GeneratorModel = Location | Covariance | Regression | EllipticalLoc


@dataclass
class NoiseCache:
    """Reference noise behind a generator batch. ``kind`` names the generator class."""
    kind: str
    z: np.ndarray
    x: np.ndarray | None = None
    xi: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.z.shape[0]


def draw_noise(g: GeneratorModel, m: int, rng: RngStream) -> NoiseCache:
    if int(m) < 1:
        raise InvalidInputError("m must be positive")
    kind = type(g).__name__
    if isinstance(g, (Location, Covariance)):
        return NoiseCache(kind, rng.normal((m, g.dim)))
    if isinstance(g, Regression):
        xz = rng.normal((m, g.dim))
        return NoiseCache(kind, xz[:, -1].copy(), x=xz[:, :-1].copy())
    if isinstance(g, EllipticalLoc):
        u = sphere_uniform(m, g.dim, rng)
        return NoiseCache(kind, u, xi=sample_xi(g.xi, m, rng))
    raise InvalidInputError(f"unknown generator {g!r}")


def push_forward(g: GeneratorModel, noise: NoiseCache) -> np.ndarray:
    """Deterministic map from noise to samples at the current parameters."""
    if noise.kind != type(g).__name__:
        raise InvalidStateError(f"noise drawn for {noise.kind}, generator is {type(g).__name__}")
    if isinstance(g, Location):
        return g.theta + noise.z
    if isinstance(g, Covariance):
        return noise.z @ g.A.T
    if isinstance(g, Regression):
        return np.column_stack([noise.x, noise.x @ g.beta + noise.z])
    return g.theta + noise.xi[:, None] * (noise.z @ g.A.T)


def gen_sample(g: GeneratorModel, m: int, rng: RngStream) -> tuple[np.ndarray, NoiseCache]:
    """Draw ``m`` generator samples; returns ``(samples, noise)``."""
    noise = draw_noise(g, m, rng)
    return push_forward(g, noise), noise


def pullback_grads(g: GeneratorModel, noise: NoiseCache, input_grads) -> dict[str, np.ndarray]:
    """Chain rule from critic input-gradients to the generator's learnable parameters."""
    G = np.asarray(input_grads, dtype=np.float64)
    if noise.kind != type(g).__name__:
        raise InvalidStateError(f"noise drawn for {noise.kind}, generator is {type(g).__name__}")
    if G.shape != (noise.size, g.dim):
        raise InvalidStateError(f"input gradients of shape {G.shape} do not match the noise batch")
    if isinstance(g, Location):
        return {"theta": G.sum(axis=0)}
    if isinstance(g, Covariance):
        return {"A": G.T @ noise.z}
    if isinstance(g, Regression):
        return {"beta": noise.x.T @ G[:, -1]}
    grads = {}
    if g.estimand == "scatter" or g.learn_A:
        grads["A"] = (G * noise.xi[:, None]).T @ noise.z
    if g.estimand == "location":
        grads["theta"] = G.sum(axis=0)
    return grads


# --- parameter spaces ----------------------------------------------------------

@dataclass(frozen=True)
class Unbounded:
    pass


@dataclass(frozen=True)
class CovBand:
    """Eigenvalues of ``A A^T`` restricted to ``[M1, M2]``."""
    M1: float
    M2: float

    def __post_init__(self):
        if not 0 < self.M1 <= self.M2:
            raise InvalidInputError(f"need 0 < M1 <= M2, got {self.M1}, {self.M2}")


@dataclass(frozen=True)
class BetaBall:
    B1: float

    def __post_init__(self):
        if not self.B1 > 0:
            raise InvalidInputError("B1 must be positive")


ParamSpace = Unbounded | CovBand | BetaBall


def project_params(g: GeneratorModel, space: ParamSpace, *, inplace: bool = False) -> GeneratorModel:
    """Map the generator back into ``space``.

    ``CovBand`` clamps the spectrum of ``A A^T`` and replaces ``A`` with the
    symmetric square root of the clamped matrix (only ``A A^T`` is
    identified). ``BetaBall`` rescales ``beta`` onto the ball.
    """
    out = g if inplace else _copy(g)
    if isinstance(space, Unbounded):
        return out
    if isinstance(space, CovBand) and isinstance(out, (Covariance, EllipticalLoc)):
        S = out.A @ out.A.T
        S = 0.5 * (S + S.T)
        clamped = eigen_clamp(S, space.M1, space.M2)
        if clamped is not S and not np.array_equal(clamped, S):
            out.A[...] = sym_sqrt(clamped)
        return out
    if isinstance(space, BetaBall) and isinstance(out, Regression):
        nrm = np.linalg.norm(out.beta)
        if nrm > space.B1:
            out.beta *= space.B1 / nrm
            while np.linalg.norm(out.beta) > space.B1:
                out.beta *= 1.0 - 4 * np.finfo(float).eps
        return out
    raise InvalidInputError(f"parameter space {space!r} does not apply to {type(g).__name__}")


def _copy(g: GeneratorModel) -> GeneratorModel:
    if isinstance(g, Location):
        return Location(g.theta)
    if isinstance(g, Covariance):
        return Covariance(g.A)
    if isinstance(g, Regression):
        return Regression(g.beta)
    return EllipticalLoc(g.theta, g.A, g.xi, g.estimand, g.learn_A)


def copy_generator(g: GeneratorModel) -> GeneratorModel:
    return _copy(g)


def extract_estimate(g: GeneratorModel) -> np.ndarray:
    """The estimate carried by ``g``: theta, ``A A^T`` or beta."""
    if isinstance(g, Location):
        return g.theta.copy()
    if isinstance(g, Covariance):
        S = g.A @ g.A.T
        return 0.5 * (S + S.T)
    if isinstance(g, Regression):
        return g.beta.copy()
    if g.estimand == "scatter":
        S = g.A @ g.A.T
        return 0.5 * (S + S.T)
    return g.theta.copy()
