"""Estimation losses, the exact empirical W1 distance and theoretical rate curves."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .core_math import as_matrix, as_vector, spectral_norm
from .errors import InvalidInputError

W1_MAX_N = 1024


@dataclass(frozen=True)
class LocSquaredL2:
    pass


@dataclass(frozen=True)
class CovSpectral:
    pass


@dataclass(frozen=True)
class RegL2:
    pass


@dataclass(frozen=True, eq=False)
class RegPrediction:
    """``E_X (X^T (beta_hat - beta))^2`` for ``X`` with covariance ``Sigma``."""
    Sigma: np.ndarray

    def __post_init__(self):
        S = as_matrix(self.Sigma, "Sigma")
        if S.shape[0] != S.shape[1] or not np.allclose(S, S.T, atol=1e-9):
            raise InvalidInputError("Sigma must be symmetric")
        object.__setattr__(self, "Sigma", S)


LossKind = LocSquaredL2 | CovSpectral | RegL2 | RegPrediction


def loss(kind: LossKind, estimate, truth) -> float:
    est = np.asarray(estimate, dtype=np.float64)
    tru = np.asarray(truth, dtype=np.float64)
    if est.shape != tru.shape:
        raise InvalidInputError(f"estimate shape {est.shape} differs from truth shape {tru.shape}")
    diff = est - tru
    if isinstance(kind, LocSquaredL2):
        return float(diff @ diff)
    if isinstance(kind, CovSpectral):
        if not diff.any():
            return 0.0
        return spectral_norm(diff)
    if isinstance(kind, RegL2):
        return float(np.linalg.norm(diff))
    if isinstance(kind, RegPrediction):
        if kind.Sigma.shape != (diff.size, diff.size):
            raise InvalidInputError("Sigma does not match the coefficient dimension")
        return float(max(diff @ kind.Sigma @ diff, 0.0))
    raise InvalidInputError(f"unknown loss kind {kind!r}")


def pairwise_distances(S1: np.ndarray, S2: np.ndarray) -> np.ndarray:
    diff = S1[:, None, :] - S2[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def w1_exact(S1, S2) -> float:
    """Exact W1 between two equal-size uniform empirical measures.

    Solves the optimal assignment under Euclidean cost with the Hungarian
    method; sample counts above ``W1_MAX_N`` are refused.
    """
    S1 = as_matrix(S1, "S1")
    S2 = as_matrix(S2, "S2")
    if S1.shape != S2.shape:
        raise InvalidInputError(f"sample shapes differ: {S1.shape} vs {S2.shape}")
    n = S1.shape[0]
    if n > W1_MAX_N:
        raise InvalidInputError(f"w1_exact is limited to n <= {W1_MAX_N}, got {n}")
    cost = np.ascontiguousarray(pairwise_distances(S1, S2))
    assignment = _backend.kernels.hungarian(cost)
    return math.fsum(cost[np.arange(n), assignment]) / n


def complexity(p: int, variant: str = "dense", k: int | None = None) -> float:
    """Effective dimension in the rate: ``p``, ``k log(p/k)`` or the banded term."""
    if variant == "dense":
        return float(p)
    if k is None or k < 1:
        raise InvalidInputError(f"variant {variant!r} needs a positive k")
    if variant == "sparse":
        return k * math.log(p / k)
    if variant == "banded":
        return max(2.0 * k, math.log(p) + 2.0 * k * math.log(math.log(p) / (2.0 * k)))
    raise InvalidInputError(f"unknown variant {variant!r}")


def theory_bound(p: int, n: int, L: int, eps: float, C: float = 1.0, variant: str = "dense", k: int | None = None) -> float:
    """``C * max(2^L sqrt(d / n), eps)`` with ``d`` from :func:`complexity`."""
    if p < 1 or n < 1 or L < 1 or not C > 0:
        raise InvalidInputError("p, n, L and C must be positive")
    if eps < 0:
        raise InvalidInputError("eps must be nonnegative")
    d = complexity(p, variant, k)
    return C * max(2.0 ** L * math.sqrt(max(d, 0.0) / n), eps)
