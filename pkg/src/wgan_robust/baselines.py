"""Non-robust comparators: sample mean, sample covariance, least squares."""
from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

from .core_math import as_matrix, as_vector, cholesky
from .errors import InvalidInputError, NotPositiveDefiniteError


def sample_mean(X) -> np.ndarray:
    X = as_matrix(X, "X")
    return X.mean(axis=0)


def sample_covariance(X, known_mean=0.0, *, center: bool = False) -> np.ndarray:
    """``(1/n) sum (x_i - mu)(x_i - mu)^T``.

    ``mu`` is ``known_mean`` (zero by default) unless ``center=True``, in
    which case the sample mean is used and at least two rows are required.
    """
    X = as_matrix(X, "X")
    n, p = X.shape
    if center:
        if n < 2:
            raise InvalidInputError("need at least two rows to centre by the sample mean")
        mu = X.mean(axis=0)
    else:
        mu = np.broadcast_to(np.asarray(known_mean, dtype=np.float64), (p,))
    D = X - mu
    S = D.T @ D / n
    return 0.5 * (S + S.T)


def ols(X, y, ridge: float = 0.0) -> np.ndarray:
    """Solve ``(X^T X + ridge I) beta = X^T y`` through a Cholesky factor."""
    X = as_matrix(X, "X")
    y = as_vector(y, "y")
    if y.size != X.shape[0]:
        raise InvalidInputError("X and y have different numbers of rows")
    if ridge < 0:
        raise InvalidInputError("ridge must be nonnegative")
    G = X.T @ X + ridge * np.eye(X.shape[1])
    try:
        L = cholesky(0.5 * (G + G.T))
    except NotPositiveDefiniteError as exc:
        raise NotPositiveDefiniteError(exc.pivot, f"normal equations are singular at pivot {exc.pivot}; pass ridge > 0") from None
    rhs = X.T @ y
    return solve_triangular(L.T, solve_triangular(L, rhs, lower=True), lower=False)
