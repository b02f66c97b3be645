"""Alternating adversarial training of critic and generator.

Each iteration first ascends the critic on
``mean f(data batch) - mean f(generator batch)`` and projects it back onto
its constraint set, then ascends the generator parameters on
``mean f(generator batch)`` and projects them onto the parameter space.
Both players use RMSprop.
"""
from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import discriminator as disc
from .core_math import RngStream
from .distributions import ChiP, Scaled
from .errors import DivergedTrainingError, InvalidInputError
from .generators import (
    GeneratorModel,
    ParamSpace,
    Unbounded,
    copy_generator,
    draw_noise,
    extract_estimate,
    gen_sample,
    project_params,
    pullback_grads,
    push_forward,
)
from .optimizer import RmsPropState, batch_size_for, rmsprop_step


@dataclass
class TrainConfig:
    iters: int = 2000
    critic_steps_per_iter: int = 1
    gen_steps_per_iter: int = 1
    lr: float = 0.005
    decay: float = 0.9
    eps: float = 1e-8
    batch: int | None = None
    seed: int = 0
    stream_id: int = 0
    param_space: ParamSpace = field(default_factory=Unbounded)
    eval_every: int = 50
    eval_size: int = 512
    best_iterate: bool = False
    average_tail: float = 0.0
    revive_dead_units: bool = True
    checkpoint_every: int = 0
    checkpoint_dir: str | None = None

    def __post_init__(self):
        for name in ("iters", "critic_steps_per_iter", "gen_steps_per_iter", "eval_every", "eval_size"):
            if int(getattr(self, name)) < 1:
                raise InvalidInputError(f"{name} must be positive")
        if self.batch is not None and int(self.batch) < 1:
            raise InvalidInputError("batch must be positive")
        if not self.lr > 0:
            raise InvalidInputError("lr must be positive")
        if not 0.0 <= self.average_tail <= 1.0:
            raise InvalidInputError("average_tail must lie in [0, 1]")
        if self.average_tail > 0 and self.best_iterate:
            raise InvalidInputError("average_tail and best_iterate are mutually exclusive")


@dataclass
class TrainReport:
    estimate: np.ndarray
    objective_trace: list[tuple[int, float]]
    final_ipm: float
    wall_time: float
    seed: int
    stream_id: int
    iters: int
    net: disc.DiscriminatorNet
    generator: GeneratorModel

    def same_result(self, other: "TrainReport") -> bool:
        """Equality of everything except wall time."""
        return (
            np.array_equal(self.estimate, other.estimate)
            and self.objective_trace == other.objective_trace
            and self.final_ipm == other.final_ipm
            and (self.seed, self.stream_id, self.iters) == (other.seed, other.stream_id, other.iters)
        )


def _flat_grads(grads: list[disc.LayerGrad]) -> dict[str, np.ndarray]:
    out = {}
    for i, g in enumerate(grads):
        out[f"W{i}"] = g.W
        if g.b is not None:
            out[f"b{i}"] = g.b
    return out


def critic_objective(net: disc.DiscriminatorNet, real: np.ndarray, fake: np.ndarray) -> float:
    vals, _ = disc.forward(net, np.vstack([real, fake]))
    return float(vals[: real.shape[0]].mean() - vals[real.shape[0]:].mean())


def evaluate_ipm(net: disc.DiscriminatorNet, data, g: GeneratorModel, m_gen: int, rng: RngStream) -> float:
    """``mean f(data) - mean f(fresh generator draws)`` for the fixed critic."""
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[1] != net.input_dim or g.dim != net.input_dim:
        raise InvalidInputError("data, critic and generator dimensions must agree")
    fake, _ = gen_sample(g, m_gen, rng)
    return critic_objective(net, data, fake)


def _check_finite_params(params: dict[str, np.ndarray], it: int) -> None:
    for arr in params.values():
        if not np.all(np.isfinite(arr)):
            raise DivergedTrainingError(it)


def train(data, net0: disc.DiscriminatorNet, gen0: GeneratorModel, cfg: TrainConfig, *, resume_from: str | None = None) -> TrainReport:
    """Run the alternating critic/generator loop and return the final estimate.

    The inputs ``net0`` and ``gen0`` are not modified. The run is a pure
    function of ``(data, net0, gen0, cfg)``.
    """
    t0 = time.perf_counter()
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[1] != net0.input_dim or gen0.dim != net0.input_dim:
        raise InvalidInputError(
            f"data has {data.shape[-1]} columns, critic expects {net0.input_dim}, generator produces {gen0.dim}"
        )
    if not np.all(np.isfinite(data)):
        raise InvalidInputError("data has non-finite entries")
    n = data.shape[0]
    batch = int(cfg.batch or batch_size_for(n))

    rng = RngStream(cfg.seed, cfg.stream_id)
    net = net0.copy()
    gen = copy_generator(gen0)
    critic_opt = RmsPropState(cfg.lr, cfg.decay, cfg.eps)
    gen_opt = RmsPropState(cfg.lr, cfg.decay, cfg.eps)

    eval_rng = rng.spawn(cfg.stream_id ^ 0xE7A1)
    m_eval = min(n, cfg.eval_size)
    eval_real = data[np.sort(eval_rng.gen.permutation(n)[:m_eval])]
    eval_noise = draw_noise(gen, m_eval, eval_rng)

    trace: list[tuple[int, float]] = []
    start = 1
    if resume_from is not None:
        state = load_checkpoint(resume_from)
        net, gen = state["net"], state["generator"]
        critic_opt.v, gen_opt.v = state["critic_v"], state["gen_v"]
        rng.gen.bit_generator.state = state["rng_state"]
        trace = state["trace"]
        start = state["iteration"] + 1

    best_val, best_gen = np.inf, None
    # generator iterates after avg_start are averaged into the final estimate
    avg_start = cfg.iters - int(round(cfg.average_tail * cfg.iters)) if cfg.average_tail > 0 else cfg.iters + 1
    avg_sum, avg_count = None, 0
    if resume_from is not None and "avg_sum" in state:
        avg_sum, avg_count = state["avg_sum"], state["avg_count"]
    w_real = np.full(batch, 1.0 / batch)
    up_critic = np.concatenate([w_real, -w_real])

    for it in range(start, cfg.iters + 1):
        for _ in range(cfg.critic_steps_per_iter):
            real = data[rng.integers(n, batch)]
            fake, _ = gen_sample(gen, batch, rng)
            vals, cache = disc.forward(net, np.vstack([real, fake]))
            if not np.all(np.isfinite(vals)):
                raise DivergedTrainingError(it)
            grads, _ = disc.backward(net, cache, up_critic)
            params = net.params()
            rmsprop_step(critic_opt, params, _flat_grads(grads), "ascent")
            _check_finite_params(params, it)
            disc.project(net, inplace=True)
            if cfg.revive_dead_units:
                for layer_idx, unit in disc.revive_dead_units(net, cache, rng):
                    v = critic_opt.v.get(f"W{layer_idx}")
                    if v is not None:
                        v[unit] = 0.0

        for _ in range(cfg.gen_steps_per_iter):
            fake, noise = gen_sample(gen, batch, rng)
            vals, cache = disc.forward(net, fake)
            _, gx = disc.backward(net, cache, w_real)
            params = gen.params()
            rmsprop_step(gen_opt, params, pullback_grads(gen, noise, gx), "ascent")
            _check_finite_params(params, it)
            project_params(gen, cfg.param_space, inplace=True)

        if it > avg_start:
            if avg_sum is None:
                avg_sum = {k: v.copy() for k, v in gen.params().items()}
            else:
                for k, v in gen.params().items():
                    avg_sum[k] += v
            avg_count += 1

        if it % cfg.eval_every == 0 or it == cfg.iters:
            val = critic_objective(net, eval_real, push_forward(gen, eval_noise))
            if not np.isfinite(val):
                raise DivergedTrainingError(it)
            trace.append((it, val))
            if cfg.best_iterate and val < best_val:
                best_val, best_gen = val, copy_generator(gen)

        if cfg.checkpoint_dir and cfg.checkpoint_every and it % cfg.checkpoint_every == 0:
            save_checkpoint(
                os.path.join(cfg.checkpoint_dir, f"iter_{it:07d}"),
                net, gen, critic_opt, gen_opt, rng, it, trace, avg_sum, avg_count,
            )

    final_gen = best_gen if best_gen is not None else gen
    if avg_count:
        final_gen = copy_generator(gen)
        for k, v in final_gen.params().items():
            v[...] = avg_sum[k] / avg_count
        project_params(final_gen, cfg.param_space, inplace=True)
    final_ipm = evaluate_ipm(net, eval_real, final_gen, m_eval, eval_rng)
    return TrainReport(
        estimate=extract_estimate(final_gen),
        objective_trace=trace,
        final_ipm=final_ipm,
        wall_time=time.perf_counter() - t0,
        seed=cfg.seed,
        stream_id=cfg.stream_id,
        iters=cfg.iters,
        net=net,
        generator=final_gen,
    )


# --- checkpoints --------------------------------------------------------------------

def save_checkpoint(path, net, gen, critic_opt, gen_opt, rng, iteration, trace, avg_sum=None, avg_count=0) -> None:
    """Write ``net.txt``, ``generator.npz``, ``optimizer.npz`` and ``state.json`` under ``path``."""
    os.makedirs(path, exist_ok=True)
    disc.save(net, os.path.join(path, "net.txt"))
    gparams = {k: v for k, v in vars(gen).items() if isinstance(v, np.ndarray)}
    np.savez(os.path.join(path, "generator.npz"), **gparams)
    opt = {f"critic/{k}": v for k, v in critic_opt.v.items()}
    opt.update({f"gen/{k}": v for k, v in gen_opt.v.items()})
    if avg_sum is not None:
        opt.update({f"avg/{k}": v for k, v in avg_sum.items()})
    np.savez(os.path.join(path, "optimizer.npz"), **opt)
    state = {
        "iteration": iteration,
        "generator": type(gen).__name__,
        "generator_meta": {k: v for k, v in vars(gen).items() if isinstance(v, (str, bool))},
        "rng_state": rng.gen.bit_generator.state,
        "trace": trace,
        "avg_count": avg_count,
    }
    if hasattr(gen, "xi"):
        state["xi"] = _xi_to_list(gen.xi)
    with open(os.path.join(path, "state.json"), "w") as fh:
        json.dump(state, fh, default=_json_default)


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(type(obj))


def _xi_to_list(xi) -> list:
    """``ChiP(p)`` -> ``[p]``; each enclosing ``Scaled(., c)`` appends ``c``."""
    scales = []
    while isinstance(xi, Scaled):
        scales.append(xi.c)
        xi = xi.base
    return [xi.p, *reversed(scales)]


def _xi_from_list(items: list):
    xi = ChiP(int(items[0]))
    for c in items[1:]:
        xi = Scaled(xi, float(c))
    return xi


def load_checkpoint(path) -> dict:
    from . import generators

    with open(os.path.join(path, "state.json")) as fh:
        state = json.load(fh)
    net = disc.load(os.path.join(path, "net.txt"))
    with np.load(os.path.join(path, "generator.npz")) as z:
        arrays = {k: z[k] for k in z.files}
    cls = getattr(generators, state["generator"])
    kwargs = dict(arrays, **state.get("generator_meta", {}))
    if "xi" in state:
        kwargs["xi"] = _xi_from_list(state["xi"])
    gen = cls(**kwargs)
    with np.load(os.path.join(path, "optimizer.npz")) as z:
        critic_v = {k.split("/", 1)[1]: z[k] for k in z.files if k.startswith("critic/")}
        gen_v = {k.split("/", 1)[1]: z[k] for k in z.files if k.startswith("gen/")}
        avg_sum = {k.split("/", 1)[1]: z[k] for k in z.files if k.startswith("avg/")} or None
    rng_state = _restore_arrays(state["rng_state"])
    return {
        "net": net,
        "generator": gen,
        "critic_v": critic_v,
        "gen_v": gen_v,
        "rng_state": rng_state,
        "iteration": state["iteration"],
        "trace": [tuple(t) for t in state["trace"]],
        "avg_sum": avg_sum,
        "avg_count": state.get("avg_count", 0),
    }


def _restore_arrays(rng_state: dict) -> dict:
    out = dict(rng_state)
    out["state"] = {k: np.asarray(v, dtype=np.uint64) for k, v in rng_state["state"].items()}
    out["buffer"] = np.asarray(rng_state["buffer"], dtype=np.uint64)
    return out
