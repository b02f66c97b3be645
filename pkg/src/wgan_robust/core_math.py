"""Dense numeric kernels shared by every other module.

Vectors and matrices are plain float64 NumPy arrays; the helpers here
validate them and implement the handful of linear-algebra routines the
estimators need (power iteration, Cholesky, eigenvalue clamping, top-k).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import InvalidInputError, NotPositiveDefiniteError

_MASK64 = (1 << 64) - 1


def as_vector(v, name: str = "vector") -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError(f"{name} must be a nonempty 1-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return arr


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(M, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidInputError(f"{name} must be a nonempty 2-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return arr


def _check_symmetric(S: np.ndarray, tol: float = 1e-9) -> None:
    if S.shape[0] != S.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {S.shape}")
    scale = max(1.0, float(np.max(np.abs(S))))
    if np.max(np.abs(S - S.T)) > tol * scale:
        raise InvalidInputError("matrix is not symmetric")


class RngStream:
    """Reproducible random stream keyed by ``(seed, stream_id)``.

    Backed by the counter-based Philox generator: the 128-bit key is the
    pair ``(seed, stream_id)``, so distinct stream ids give independent
    sequences and identical pairs give identical sequences regardless of the
    order in which streams are created. A stream is single-owner state.
    """

    def __init__(self, seed: int = 0, stream_id: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        bitgen = np.random.Philox(key=np.array([self.seed, self.stream_id], dtype=np.uint64))
        self.gen = np.random.Generator(bitgen)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def spawn(self, stream_id: int) -> "RngStream":
        """A fresh stream sharing this seed with a different id."""
        return RngStream(self.seed, stream_id)

    # thin wrappers so callers never touch the generator directly
    def normal(self, size) -> np.ndarray:
        return self.gen.standard_normal(size)

    def uniform(self, size) -> np.ndarray:
        return self.gen.random(size)

    def integers(self, high: int, size) -> np.ndarray:
        return self.gen.integers(0, high, size=size)

    def chisquare(self, df: float, size) -> np.ndarray:
        return self.gen.chisquare(df, size)

    def unit_vector(self, dim: int) -> np.ndarray:
        v = self.normal(dim)
        nrm = np.linalg.norm(v)
        while nrm == 0.0:
            v = self.normal(dim)
            nrm = np.linalg.norm(v)
        return v / nrm


@dataclass(frozen=True)
class SpectralNormInfo:
    value: float
    iterations: int
    converged: bool


def spectral_norm(M, tol: float = 1e-9, max_iter: int = 10_000, *, return_info: bool = False):
    """Largest singular value of ``M`` by power iteration on ``M^T M``.

    Iterates until two consecutive Rayleigh estimates differ by less than
    ``tol`` (relative to the estimate when it exceeds one). The start vector
    is drawn from a fixed stream so the result is reproducible. With
    ``return_info=True`` a :class:`SpectralNormInfo` carrying the iteration
    count and convergence flag is returned instead of a float.
    """
    M = as_matrix(M, "M")
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    G = M.T @ M
    x = RngStream(0x5EC7, M.shape[1]).unit_vector(M.shape[1])
    est = 0.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        y = G @ x
        new = float(x @ y)
        nrm = np.linalg.norm(y)
        if nrm == 0.0:
            est, converged = 0.0, True
            break
        x = y / nrm
        if abs(new - est) < tol * max(1.0, new):
            est, converged = new, True
            break
        est = new
    value = float(np.sqrt(max(est, 0.0)))
    if return_info:
        return SpectralNormInfo(value, it, converged)
    return value


def jacobi_eigh(S, tol: float = 1e-15, max_sweeps: int = 100):
    """Symmetric eigendecomposition by cyclic Jacobi rotations.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues ascending and
    eigenvectors in columns.
    """
    S = as_matrix(S, "S")
    _check_symmetric(S)
    S = 0.5 * (S + S.T)
    return _backend.kernels.jacobi_eigh(np.ascontiguousarray(S), tol, max_sweeps)


def cholesky(S) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == S``.

    Raises :class:`NotPositiveDefiniteError` naming the first pivot that is
    not strictly positive.
    """
    S = as_matrix(S, "S")
    _check_symmetric(S)
    n = S.shape[0]
    L = np.zeros_like(S)
    for j in range(n):
        row = L[j, :j]
        pivot = S[j, j] - row @ row
        if not pivot > 0.0:
            raise NotPositiveDefiniteError(j)
        L[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            L[j + 1:, j] = (S[j + 1:, j] - L[j + 1:, :j] @ row) / L[j, j]
    return L


def eigen_clamp(S, lo: float, hi: float) -> np.ndarray:
    """Clamp the eigenvalues of symmetric ``S`` into ``[lo, hi]``."""
    if lo > hi:
        raise InvalidInputError(f"lo={lo} exceeds hi={hi}")
    w, V = jacobi_eigh(S)
    if w[0] >= lo and w[-1] <= hi:
        return np.array(S, dtype=np.float64, copy=True)
    out = (V * np.clip(w, lo, hi)) @ V.T
    return 0.5 * (out + out.T)


def sym_sqrt(S) -> np.ndarray:
    """Symmetric PSD square root (negative eigenvalues are treated as zero)."""
    w, V = jacobi_eigh(S)
    out = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
    return 0.5 * (out + out.T)


def top_k_indices(v, k: int) -> np.ndarray:
    """Indices of the ``k`` largest ``|v_i|``, ascending; ties go to the lower index."""
    v = as_vector(v, "v")
    if not 1 <= k <= v.size:
        raise InvalidInputError(f"k={k} out of range for length {v.size}")
    order = np.argsort(-np.abs(v), kind="stable")
    return np.sort(order[:k])
