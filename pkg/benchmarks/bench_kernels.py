"""Time the compiled kernels against the NumPy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both backends are checked to agree before timing.
"""
import argparse
import time

import numpy as np

from wgan_robust import _backend
from wgan_robust.core_math import RngStream
from wgan_robust.metrics import pairwise_distances


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(rng):
    for n in (64, 256, 1024):
        C = pairwise_distances(rng.normal((n, 10)), rng.normal((n, 10)) + 0.5)
        yield f"hungarian n={n}", "hungarian", C
    for p in (10, 40, 80):
        M = rng.normal((p, p))
        yield f"jacobi_eigh p={p}", "jacobi_eigh", M @ M.T / p


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    try:
        fast = _backend.get("cython")
    except ImportError:
        print("compiled extension not built; only the NumPy fallback is available")
        return 1
    slow = _backend.get("python")
    rng = RngStream(2024, 0)

    print(f"{'kernel':<22} {'compiled s':>11} {'numpy s':>11} {'speedup':>8}")
    for label, name, arg in cases(rng):
        f_fast, f_slow = getattr(fast, name), getattr(slow, name)
        if name == "hungarian":
            a, b = f_fast(arg), f_slow(arg)
            n = arg.shape[0]
            agree = np.isclose(arg[np.arange(n), a].sum(), arg[np.arange(n), b].sum(), rtol=0, atol=1e-9)
        else:
            a, b = f_fast(arg)[0], f_slow(arg)[0]
            agree = np.allclose(a, b, rtol=0, atol=1e-10)
        if not agree:
            print(f"{label}: backends disagree")
            return 1
        t_fast = best_of(lambda: f_fast(arg), args.repeat)
        t_slow = best_of(lambda: f_slow(arg), max(1, args.repeat // 2))
        print(f"{label:<22} {t_fast:>11.5f} {t_slow:>11.5f} {t_slow / t_fast:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
