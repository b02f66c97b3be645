import os
import subprocess
import sys

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from wgan_robust import _backend
from wgan_robust.core_math import RngStream

BACKENDS = ["python"]
try:
    _backend.get("cython")
    BACKENDS.append("cython")
except ImportError:
    pass


@pytest.fixture(params=BACKENDS)
def kernels(request):
    return _backend.get(request.param)


@pytest.mark.parametrize("n", [1, 2, 7, 40, 150])
def test_hungarian_optimal(kernels, n):
    C = RngStream(n, 0).uniform((n, n))
    perm = np.asarray(kernels.hungarian(np.ascontiguousarray(C)))
    assert sorted(perm.tolist()) == list(range(n))
    r, c = linear_sum_assignment(C)
    assert C[np.arange(n), perm].sum() == pytest.approx(C[r, c].sum(), abs=1e-12)


def test_hungarian_ties(kernels):
    perm = np.asarray(kernels.hungarian(np.ones((5, 5))))
    assert sorted(perm.tolist()) == list(range(5))


@pytest.mark.parametrize("p", [1, 3, 10, 30])
def test_jacobi(kernels, p):
    M = RngStream(p, 1).normal((p, p))
    S = M + M.T
    w, V = kernels.jacobi_eigh(np.ascontiguousarray(S))
    assert np.allclose(w, np.linalg.eigvalsh(S), atol=1e-11)
    assert np.allclose(V @ np.diag(w) @ V.T, S, atol=1e-11)


def test_backends_agree():
    if len(BACKENDS) < 2:
        pytest.skip("compiled extension not built")
    C = RngStream(9, 9).normal((60, 60))
    a = _backend.get("python").hungarian(C)
    b = _backend.get("cython").hungarian(C)
    assert C[np.arange(60), np.asarray(a)].sum() == pytest.approx(C[np.arange(60), np.asarray(b)].sum(), abs=1e-10)


def test_env_forces_fallback():
    env = dict(os.environ, WGAN_ROBUST_BACKEND="python")
    out = subprocess.run(
        [sys.executable, "-c", "import wgan_robust; print(wgan_robust.BACKEND)"],
        capture_output=True, text=True, env=env, check=True,
    )
    assert out.stdout.strip() == "python"
