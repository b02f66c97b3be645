"""Property suites run by ``wgan-robust audit``.

Every suite uses fixed seeds, so a report is reproducible. A property
passes when its worst margin (observed minus allowed) is at most zero.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from . import discriminator as disc, distributions as dist, generators as gen, metrics
from .core_math import RngStream

SUITES = ("gradients", "lipschitz", "projections", "transport", "duality")

FD_STEP = 1e-5
GRAD_TOL = 1e-4
# gradients smaller than this are compared in absolute terms
GRAD_FLOOR = 1e-6


@dataclass
class PropertyResult:
    suite: str
    name: str
    trials: int
    worst: float
    limit: float
    seconds: float = 0.0

    @property
    def margin(self) -> float:
        return self.worst - self.limit

    @property
    def passed(self) -> bool:
        return bool(self.worst <= self.limit)


def _rel_err(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), GRAD_FLOOR)
    return float(np.linalg.norm(analytic - numeric) / scale)


def _central_diff(fn, arr: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    """Central differences of scalar ``fn()`` with respect to ``arr`` (perturbed in place)."""
    out = np.empty_like(arr)
    flat, gflat = arr.reshape(-1), out.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + h
        up = fn()
        flat[i] = keep - h
        down = fn()
        flat[i] = keep
        gflat[i] = (up - down) / (2 * h)
    return out


def _near_kink(net: disc.DiscriminatorNet, X: np.ndarray, gap: float = 1e-3) -> bool:
    """True if a piecewise-linear unit sits within ``gap`` of a breakpoint on ``X``."""
    _, cache = disc.forward(net, X)
    for layer, z in zip(net.layers, cache.pre):
        if layer.activation is disc.Activation.RELU and np.any(np.abs(z) < gap):
            return True
        if layer.activation is disc.Activation.RAMP and np.any(np.abs(np.abs(z) - 0.5) < gap):
            return True
    return False


def _random_net(rng: RngStream, variant: str, p: int, hidden: int, B: float, spread: float = 1.0) -> disc.DiscriminatorNet:
    widths = [int(rng.integers(p + 2, 1)[0]) + 1 for _ in range(hidden)]
    kw = {}
    if variant == "sparse":
        kw["k"] = int(rng.integers(p, 1)[0]) + 1
    elif variant == "banded":
        kw["width"] = int(rng.integers(p, 1)[0]) + 1
    net = disc.build(p, B, widths, variant, rng=rng, **kw)
    # push weights onto the constraint boundary and spread the biases
    for layer in net.layers:
        layer.W[...] = disc.project_rows(3.0 * rng.normal(layer.W.shape), layer.constraint)
    net.layers[0].b[...] = spread * rng.normal(net.layers[0].b.shape)
    net.touch()
    return net


# --- gradients ---------------------------------------------------------------------

def _critic_instance(rng: RngStream, variant: str):
    while True:
        p = int(rng.integers(7, 1)[0]) + 2
        net = _random_net(rng, variant, p, int(rng.integers(2, 1)[0]) + 1, 0.5 + 2.5 * rng.uniform(1)[0], 0.5)
        X = rng.normal((5, p))
        if not _near_kink(net, X):
            return net, X


def _critic_gradient_error(net: disc.DiscriminatorNet, X: np.ndarray, u: np.ndarray) -> float:
    _, cache = disc.forward(net, X)
    grads, gx = disc.backward(net, cache, u)

    def objective():
        return float(u @ disc.forward(net, X)[0])

    worst = 0.0
    for layer, g in zip(net.layers, grads):
        worst = max(worst, _rel_err(g.W, _central_diff(objective, layer.W)))
        if layer.b is not None:
            worst = max(worst, _rel_err(g.b, _central_diff(objective, layer.b)))
    worst = max(worst, _rel_err(gx, _central_diff(objective, X)))
    return worst


def _generator_instance(rng: RngStream, kind: str):
    p = int(rng.integers(6, 1)[0]) + 2
    if kind == "location":
        g = gen.Location(rng.normal(p))
    elif kind == "covariance":
        g = gen.Covariance(np.eye(p) + 0.3 * rng.normal((p, p)))
    elif kind == "regression":
        g = gen.Regression(rng.normal(p - 1))
    else:
        estimand = "scatter" if kind == "elliptical_scatter" else "location"
        g = gen.EllipticalLoc(rng.normal(p), np.eye(p) + 0.3 * rng.normal((p, p)), dist.ChiP(p), estimand)
    return g


def _generator_gradient_error(rng: RngStream, kind: str) -> float:
    while True:
        g = _generator_instance(rng, kind)
        net = _random_net(rng, "dense", g.dim, 2, 1.0 + 2.0 * rng.uniform(1)[0], 0.5)
        noise = gen.draw_noise(g, 6, rng)
        if not _near_kink(net, gen.push_forward(g, noise)):
            break
    u = rng.normal(6)
    _, cache = disc.forward(net, gen.push_forward(g, noise))
    _, gx = disc.backward(net, cache, u)
    analytic = gen.pullback_grads(g, noise, gx)

    def objective():
        return float(u @ disc.forward(net, gen.push_forward(g, noise))[0])

    params = g.params()
    if set(analytic) != set(params):
        return math.inf
    return max(_rel_err(analytic[k], _central_diff(objective, params[k])) for k in params)


def suite_gradients(seed: int = 11) -> list[PropertyResult]:
    rng = RngStream(seed, 1)
    out = []
    for variant in ("dense", "sparse", "banded", "elliptical"):
        t0 = time.perf_counter()
        errs = []
        for _ in range(15):
            net, X = _critic_instance(rng, variant)
            errs.append(_critic_gradient_error(net, X, rng.normal(X.shape[0])))
        out.append(PropertyResult("gradients", f"critic backprop ({variant})", len(errs), max(errs), GRAD_TOL, time.perf_counter() - t0))
    for kind in ("location", "covariance", "regression", "elliptical_location", "elliptical_scatter"):
        t0 = time.perf_counter()
        errs = [_generator_gradient_error(rng, kind) for _ in range(10)]
        out.append(PropertyResult("gradients", f"generator pullback ({kind})", len(errs), max(errs), GRAD_TOL, time.perf_counter() - t0))
    return out


# --- lipschitz ---------------------------------------------------------------------

def _pairs(rng: RngStream, p: int, count: int) -> tuple[np.ndarray, np.ndarray]:
    scales = np.array([0.1, 1.0, 5.0, 50.0])[rng.integers(4, count)]
    x = rng.normal((count, p)) * scales[:, None]
    log_sep = rng.uniform(count) * 7.0 - 5.0
    d = rng.normal((count, p))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return x, x + (10.0 ** log_sep)[:, None] * d


def suite_lipschitz(seed: int = 12, nets: int = 100, pairs: int = 10_000) -> list[PropertyResult]:
    rng = RngStream(seed, 2)
    out = []
    for first, variants in (("sigmoid", ("dense", "sparse", "banded")), ("ramp", ("elliptical",))):
        t0 = time.perf_counter()
        worst_lip = worst_range = -math.inf
        count = nets if first == "sigmoid" else nets // 4
        for i in range(count):
            variant = variants[i % len(variants)]
            p = int(rng.integers(20, 1)[0]) + 1
            L = int(rng.integers(3, 1)[0]) + 1
            B = float(10.0 ** (rng.uniform(1)[0] * 2.0 - 1.0))
            net = _random_net(rng, variant, p, L, B, spread=3.0)
            x, y = _pairs(rng, p, pairs)
            gap = np.abs(disc.forward(net, x)[0] - disc.forward(net, y)[0])
            dist_xy = np.linalg.norm(x - y, axis=1)
            worst_lip = max(worst_lip, float(np.max(gap - net.lipschitz_bound() * dist_xy)))
            worst_range = max(worst_range, float(np.max(gap)) - net.range_bound())
        t = time.perf_counter() - t0
        out.append(PropertyResult("lipschitz", f"{first}-first: |f(x)-f(y)| - Lip*|x-y|", count * pairs, worst_lip, 1e-9, t))
        out.append(PropertyResult("lipschitz", f"{first}-first: |f(x)-f(y)| - range", count * pairs, worst_range, 1e-9, 0.0))
    return out


# --- projections -------------------------------------------------------------------

def _random_rows(rng: RngStream, rows: int, d: int) -> np.ndarray:
    W = rng.normal((rows, d)) * (10.0 ** (rng.uniform(rows) * 6.0 - 3.0))[:, None]
    # some exact zeros and ties
    W[rng.uniform((rows, d)) < 0.1] = 0.0
    if d > 1:
        W[::7, 1] = W[::7, 0]
    return W


def suite_projections(seed: int = 13, rows: int = 10_000) -> list[PropertyResult]:
    rng = RngStream(seed, 3)
    out = []
    makers = {
        "row L2 ball": lambda d: disc.RowL2Ball(float(10.0 ** (rng.uniform(1)[0] * 2 - 1))),
        "row L1 ball": lambda d: disc.RowL1Ball(float(10.0 ** (rng.uniform(1)[0] * 2 - 1))),
        "sparse L2": lambda d: disc.RowL2Sparse(float(10.0 ** (rng.uniform(1)[0] * 2 - 1)), int(rng.integers(d, 1)[0]) + 1),
        "banded L2": lambda d: disc.RowL2Banded(float(10.0 ** (rng.uniform(1)[0] * 2 - 1)), int(rng.integers(d, 1)[0]) + 1),
    }
    per_block = 50
    for name, make in makers.items():
        t0 = time.perf_counter()
        infeasible = not_idempotent = 0
        for _ in range(rows // per_block):
            d = int(rng.integers(30, 1)[0]) + 1
            cons = make(d)
            P = disc.project_rows(_random_rows(rng, per_block, d), cons)
            infeasible += not disc.is_feasible(P, cons)
            not_idempotent += not np.array_equal(disc.project_rows(P, cons), P)
        t = time.perf_counter() - t0
        out.append(PropertyResult("projections", f"{name}: infeasible blocks", rows, float(infeasible), 0.0, t))
        out.append(PropertyResult("projections", f"{name}: non-idempotent blocks", rows, float(not_idempotent), 0.0, 0.0))
    return out


# --- transport ---------------------------------------------------------------------

def _w1_bruteforce(S1: np.ndarray, S2: np.ndarray) -> float:
    D = metrics.pairwise_distances(S1, S2)
    n = D.shape[0]
    rows = np.arange(n)
    return min(math.fsum(D[rows, list(perm)]) for perm in itertools.permutations(range(n))) / n


def suite_transport(seed: int = 14) -> list[PropertyResult]:
    rng = RngStream(seed, 4)
    out = []
    t0 = time.perf_counter()
    worst = 0.0
    trials = 0
    for n in range(1, 7):
        for _ in range(40):
            d = int(rng.integers(4, 1)[0]) + 1
            S1, S2 = rng.normal((n, d)), rng.normal((n, d)) * 2.0
            worst = max(worst, abs(metrics.w1_exact(S1, S2) - _w1_bruteforce(S1, S2)))
            trials += 1
    out.append(PropertyResult("transport", "exact vs permutation oracle (n<=6)", trials, worst, 1e-12, time.perf_counter() - t0))

    t0 = time.perf_counter()
    w_self = w_sym = w_tri = 0.0
    for _ in range(100):
        n = int(rng.integers(40, 1)[0]) + 1
        d = int(rng.integers(5, 1)[0]) + 1
        A, B, C = (rng.normal((n, d)) * s for s in (1.0, 2.0, 0.5))
        ab, ba = metrics.w1_exact(A, B), metrics.w1_exact(B, A)
        ac, cb = metrics.w1_exact(A, C), metrics.w1_exact(C, B)
        w_self = max(w_self, abs(metrics.w1_exact(A, A)))
        w_sym = max(w_sym, abs(ab - ba))
        w_tri = max(w_tri, ab - ac - cb)
    t = time.perf_counter() - t0
    out.append(PropertyResult("transport", "identity w1(S,S)=0", 100, w_self, 1e-9, t))
    out.append(PropertyResult("transport", "symmetry", 100, w_sym, 1e-9, 0.0))
    out.append(PropertyResult("transport", "triangle inequality", 100, w_tri, 1e-9, 0.0))

    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(64, 1)[0]) + 1
        d = int(rng.integers(6, 1)[0]) + 1
        S = rng.normal((n, d))
        delta = rng.normal(d) * 10.0 ** (rng.uniform(1)[0] * 4 - 2)
        worst = max(worst, abs(metrics.w1_exact(S, S + delta) - np.linalg.norm(delta)))
    out.append(PropertyResult("transport", "translation w1(S,S+delta)=|delta|", 100, worst, 1e-9, time.perf_counter() - t0))
    return out


# --- duality -----------------------------------------------------------------------

def suite_duality(seed: int = 15, nets: int = 50, n: int = 64) -> list[PropertyResult]:
    rng = RngStream(seed, 5)
    t0 = time.perf_counter()
    worst = -math.inf
    variants = ("dense", "sparse", "banded", "elliptical")
    for i in range(nets):
        p = int(rng.integers(10, 1)[0]) + 1
        net = _random_net(rng, variants[i % 4], p, int(rng.integers(3, 1)[0]) + 1, float(0.5 + 4.0 * rng.uniform(1)[0]), 1.0)
        X = rng.normal((n, p))
        kind = i % 3
        if kind == 0:
            Y = X + 0.05 * rng.normal((n, p))
        elif kind == 1:
            Y = rng.normal((n, p)) + rng.normal(p)
        else:
            Y = dist.sample(dist.IsoCauchy(p), n, rng)
        gap = abs(disc.forward(net, X)[0].mean() - disc.forward(net, Y)[0].mean())
        worst = max(worst, gap - net.lipschitz_bound() * metrics.w1_exact(X, Y))
    return [PropertyResult("duality", "|mean f(X) - mean f(Y)| - Lip*w1", nets, worst, 1e-9, time.perf_counter() - t0)]


_RUNNERS = {
    "gradients": suite_gradients,
    "lipschitz": suite_lipschitz,
    "projections": suite_projections,
    "transport": suite_transport,
    "duality": suite_duality,
}


def run_suite(name: str) -> list[PropertyResult]:
    """Run one suite (or ``'all'``) and return its property results."""
    if name == "all":
        return [r for s in SUITES for r in _RUNNERS[s]()]
    if name not in _RUNNERS:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)} or all")
    return _RUNNERS[name]()


def format_report(results: list[PropertyResult]) -> str:
    lines = [f"{'suite':<12} {'property':<48} {'trials':>9} {'worst':>12} {'limit':>9} {'secs':>7}  result"]
    for r in results:
        lines.append(
            f"{r.suite:<12} {r.name:<48} {r.trials:>9d} {r.worst:>12.3e} {r.limit:>9.1e} {r.seconds:>7.2f}  {'PASS' if r.passed else 'FAIL'}"
        )
    failed = sum(not r.passed for r in results)
    lines.append(f"{len(results) - failed}/{len(results)} properties passed")
    return "\n".join(lines)
