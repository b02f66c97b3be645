"""Experiment grid runner: contaminated data, W-GAN fit, baseline, losses.

A config is a flat ``key = value`` text file; list-valued keys take
comma-separated values. Every (task, model, p, n, alpha, seed) cell derives
its random streams from a hash of the cell, so results do not depend on the
order or process in which cells run.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import baselines, discriminator as disc, distributions as dist, generators as gen, metrics
from .core_math import RngStream, eigen_clamp, sym_sqrt
from .errors import DivergedTrainingError, InvalidInputError
from .training import TrainConfig, train

TASKS = (
    "location",
    "sparse_location",
    "covariance",
    "banded_cov",
    "sparse_cov",
    "elliptical_location",
    "elliptical_cov",
    "regression",
)
MODELS = ("M1", "M2", "M3", "shift", "regression_cauchy")

ROW_FIELDS = ("task", "model", "p", "n", "alpha", "seed", "wgan_loss", "baseline_loss", "wall_time", "iters", "status")
SUMMARY_FIELDS = (
    "task", "model", "p", "n", "alpha", "repeats", "failed",
    "wgan_mean", "wgan_std", "wgan_median", "baseline_mean", "baseline_std", "baseline_median", "table_cell",
)


@dataclass
class ExperimentConfig:
    task: str = "location"
    models: list[str] = field(default_factory=lambda: ["M2"])
    p_grid: list[int] = field(default_factory=lambda: [10])
    n_grid: list[int] = field(default_factory=lambda: [1024])
    alpha_grid: list[float] = field(default_factory=lambda: [0.1])
    repeats: int = 10
    seed: int = 0
    # training
    iters: int = 2000
    critic_steps: int = 1
    gen_steps: int = 1
    lr: float = 0.005
    batch: int = 0
    eval_every: int = 50
    revive_dead_units: bool = True
    best_iterate: bool = False
    average_tail: float = 0.5
    checkpoint_every: int = 0
    # function class and parameter space
    B: float = 0.0
    L: int = 2
    M1: float = 0.25
    M2: float = 4.0
    B1: float = 1.0
    k: int = 0
    project_beta: bool = True
    elliptical_learn_scatter: bool = False
    # output
    out: str = "results"
    record_time: bool = False
    smoke: bool = False

    def validate(self) -> None:
        problems = []
        if self.task not in TASKS:
            problems.append(f"task: unknown task {self.task!r}")
        if not self.models:
            problems.append("models: grid is empty")
        for m in self.models:
            if m not in MODELS:
                problems.append(f"models: unknown model {m!r}")
        if self.task == "regression" and any(m != "regression_cauchy" for m in self.models):
            problems.append("models: the regression task uses model regression_cauchy")
        if self.task != "regression" and "regression_cauchy" in self.models:
            problems.append("models: regression_cauchy applies only to the regression task")
        for name in ("p_grid", "n_grid", "alpha_grid"):
            if not getattr(self, name):
                problems.append(f"{name}: grid is empty")
        if any(p < 1 for p in self.p_grid):
            problems.append("p_grid: dimensions must be positive")
        if any(n < 2 for n in self.n_grid):
            problems.append("n_grid: sample sizes must be at least 2")
        if any(not 0.0 <= a <= 1.0 for a in self.alpha_grid) and "shift" not in self.models:
            problems.append("alpha_grid: mixture weights must lie in [0, 1]")
        if self.task == "regression" and any(p % 5 for p in self.p_grid):
            problems.append("p_grid: regression coefficients need p divisible by 5")
        for name in ("repeats", "iters", "critic_steps", "gen_steps", "eval_every", "L"):
            if getattr(self, name) < 1:
                problems.append(f"{name}: must be positive")
        if self.checkpoint_every < 0:
            problems.append("checkpoint_every: must be nonnegative (0 disables checkpoints)")
        if not 0.0 <= self.average_tail <= 1.0:
            problems.append("average_tail: must lie in [0, 1]")
        if self.average_tail > 0 and self.best_iterate:
            problems.append("best_iterate: cannot be combined with average_tail > 0")
        if self.lr <= 0:
            problems.append("lr: must be positive")
        if self.B < 0:
            problems.append("B: must be positive (0 selects the task default)")
        if not 0 < self.M1 <= self.M2:
            problems.append("M1, M2: need 0 < M1 <= M2")
        if self.B1 <= 0:
            problems.append("B1: must be positive")
        if self.k < 0:
            problems.append("k: must be nonnegative")
        if problems:
            raise InvalidInputError("; ".join(problems))

    def cells(self) -> list[tuple]:
        ps = [p for p in self.p_grid if p <= 20] if self.smoke else self.p_grid
        ns = [n for n in self.n_grid if n <= 1024] if self.smoke else self.n_grid
        return [
            (self.task, model, p, n, alpha, self.seed + r)
            for model in self.models
            for p in ps
            for n in ns
            for alpha in self.alpha_grid
            for r in range(self.repeats)
        ]


_LIST_KEYS = {"models": str, "p_grid": int, "n_grid": int, "alpha_grid": float}
_ALIASES = {"model": "models", "eps_or_alpha_grid": "alpha_grid", "eps_grid": "alpha_grid"}


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_config(text: str) -> ExperimentConfig:
    """Parse ``key = value`` lines (``#`` starts a comment) into a validated config."""
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = _ALIASES.get(key, key)
        if key not in types:
            raise InvalidInputError(f"line {lineno}: unknown key {key!r}")
        try:
            if key in _LIST_KEYS:
                values[key] = [_LIST_KEYS[key](v.strip()) for v in val.split(",") if v.strip()]
            elif types[key] == "bool":
                values[key] = _parse_bool(val)
            elif types[key] == "int":
                values[key] = int(val)
            elif types[key] == "float":
                values[key] = float(val)
            else:
                values[key] = val
        except ValueError as exc:
            raise InvalidInputError(f"line {lineno}: bad value for {key}: {exc}") from None
    cfg = ExperimentConfig(**values)
    cfg.validate()
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


# --- one cell ---------------------------------------------------------------------

def stream_id(*parts) -> int:
    """Stable 64-bit id for a tuple of cell coordinates."""
    digest = hashlib.blake2b("|".join(repr(p) for p in parts).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass
class ResultRow:
    task: str
    model: str
    p: int
    n: int
    alpha: float
    seed: int
    wgan_loss: float
    baseline_loss: float
    wall_time: float
    iters: int
    status: str = "ok"


@dataclass
class CellSetup:
    data: np.ndarray
    net: disc.DiscriminatorNet
    generator: gen.GeneratorModel
    space: gen.ParamSpace
    truth: np.ndarray
    loss_kind: metrics.LossKind
    baseline: np.ndarray


def _contamination(model: str, base, p: int, alpha: float):
    if model == "shift":
        return dist.DeterministicShift(base, alpha * np.ones(p) / math.sqrt(p))
    outlier = {
        "M1": dist.IsoCauchy(p),
        "M2": dist.Gaussian(2.0 * np.ones(p), np.eye(p)),
        "M3": dist.IsoGumbel(p),
    }[model]
    return dist.Mixture(base, outlier, alpha)


def _sparsity(cfg: ExperimentConfig, p: int) -> int:
    return cfg.k if cfg.k > 0 else max(1, p // 4)


def _clamped_root(S: np.ndarray, cfg: ExperimentConfig) -> np.ndarray:
    return sym_sqrt(eigen_clamp(S, cfg.M1, cfg.M2))


def setup_cell(cfg: ExperimentConfig, model: str, p: int, n: int, alpha: float, seed: int) -> CellSetup:
    """Data, initial critic and generator, and loss bookkeeping for one cell.

    Generators start from the non-robust baseline estimate (projected into
    the parameter space where there is one).
    """
    task = cfg.task
    data_rng = RngStream(seed, stream_id(task, model, p, n, alpha, seed, "data"))
    init_rng = RngStream(seed, stream_id(task, model, p, n, alpha, seed, "init"))
    widths = [math.ceil(p / 2 ** (i + 1)) for i in range(cfg.L)]

    if task == "regression":
        spec = dist.regression_model(p, alpha)
        data = dist.sample_regression(spec, n, data_rng)
        beta0 = baselines.ols(data[:, :-1], data[:, -1])
        B = cfg.B or cfg.B1 + 1.0
        q = p + 1
        net = disc.build(q, B, [math.ceil(q / 2 ** (i + 1)) for i in range(cfg.L)], rng=init_rng)
        space = gen.BetaBall(cfg.B1) if cfg.project_beta else gen.Unbounded()
        g = gen.project_params(gen.Regression(beta0), space)
        return CellSetup(data, net, g, space, spec.beta, metrics.RegL2(), beta0)

    elliptical = task.startswith("elliptical")
    base = dist.Elliptical(np.zeros(p), dist.ChiP(p), np.eye(p)) if elliptical else dist.Gaussian(np.zeros(p), np.eye(p))
    data = dist.sample_contaminated(_contamination(model, base, p, alpha), n, data_rng)

    if task in ("location", "sparse_location", "elliptical_location"):
        theta0 = baselines.sample_mean(data)
        B = cfg.B or 1.0
        if task == "sparse_location":
            net = disc.build(p, B, widths, "sparse", k=_sparsity(cfg, p), rng=init_rng)
        else:
            net = disc.build(p, B, widths, rng=init_rng)
        if task == "elliptical_location":
            g = gen.EllipticalLoc(theta0, np.eye(p), dist.ChiP(p), "location", cfg.elliptical_learn_scatter)
        else:
            g = gen.Location(theta0)
        return CellSetup(data, net, g, gen.Unbounded(), np.zeros(p), metrics.LocSquaredL2(), theta0)

    # covariance family: known zero mean, spectrum constrained to [M1, M2]
    S0 = baselines.sample_covariance(data)
    space = gen.CovBand(cfg.M1, cfg.M2)
    B = cfg.B or 1.0 / cfg.M1
    k = _sparsity(cfg, p)
    if task == "covariance":
        net = disc.build(p, B, widths, rng=init_rng)
    elif task == "banded_cov":
        net = disc.build(p, B, widths, "banded", width=min(p, 2 * k), rng=init_rng)
    elif task == "sparse_cov":
        net = disc.build(p, B, widths, "sparse", k=min(p, 2 * k), rng=init_rng)
    else:
        net = disc.build(p, B, widths, "elliptical", rng=init_rng)
    A0 = _clamped_root(S0, cfg)
    if task == "elliptical_cov":
        g = gen.EllipticalLoc(np.zeros(p), A0, dist.ChiP(p), "scatter")
    else:
        g = gen.Covariance(A0)
    return CellSetup(data, net, g, space, np.eye(p), metrics.CovSpectral(), S0)


def checkpoint_dir(cfg: ExperimentConfig, cell: tuple) -> str:
    task, model, p, n, alpha, seed = cell
    return os.path.join(cfg.out, "checkpoints", f"{task}_{model}_p{p}_n{n}_a{alpha!r}_s{seed}")


def train_config(cfg: ExperimentConfig, setup: CellSetup, seed: int, sid: int, ckpt: str | None = None) -> TrainConfig:
    return TrainConfig(
        iters=cfg.iters,
        critic_steps_per_iter=cfg.critic_steps,
        gen_steps_per_iter=cfg.gen_steps,
        lr=cfg.lr,
        batch=cfg.batch or None,
        seed=seed,
        stream_id=sid,
        param_space=setup.space,
        eval_every=cfg.eval_every,
        best_iterate=cfg.best_iterate,
        average_tail=cfg.average_tail,
        revive_dead_units=cfg.revive_dead_units,
        checkpoint_every=cfg.checkpoint_every,
        checkpoint_dir=ckpt,
    )


def run_cell(cfg: ExperimentConfig, cell: tuple) -> ResultRow:
    task, model, p, n, alpha, seed = cell
    t0 = time.perf_counter()
    setup = setup_cell(cfg, model, p, n, alpha, seed)
    base_loss = metrics.loss(setup.loss_kind, setup.baseline, setup.truth)
    sid = stream_id(task, model, p, n, alpha, seed, "train")
    try:
        ckpt = checkpoint_dir(cfg, cell) if cfg.checkpoint_every else None
        report = train(setup.data, setup.net, setup.generator, train_config(cfg, setup, seed, sid, ckpt))
    except DivergedTrainingError:
        return ResultRow(task, model, p, n, alpha, seed, math.nan, base_loss, time.perf_counter() - t0, cfg.iters, "diverged")
    wgan_loss = metrics.loss(setup.loss_kind, report.estimate, setup.truth)
    return ResultRow(task, model, p, n, alpha, seed, wgan_loss, base_loss, time.perf_counter() - t0, cfg.iters)


# --- grid and summaries -------------------------------------------------------------

def _run_cell_args(args):
    return run_cell(*args)


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> tuple[list[ResultRow], list[dict]]:
    """Run every grid cell and seed; returns ``(rows, summary)`` in grid order."""
    cfg.validate()
    cells = cfg.cells()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_cell_args, [(cfg, c) for c in cells]))
    else:
        rows = [run_cell(cfg, c) for c in cells]
    return rows, summarize(rows)


def _fmt(x: float) -> str:
    return repr(float(x))


def summarize(rows: list[ResultRow]) -> list[dict]:
    """Per-cell mean, standard deviation (ddof=1) and median over seeds."""
    groups: dict[tuple, list[ResultRow]] = {}
    for r in rows:
        groups.setdefault((r.task, r.model, r.p, r.n, r.alpha), []).append(r)
    out = []
    for key, members in groups.items():
        ok = [r for r in members if r.status == "ok"]
        w = np.array([r.wgan_loss for r in ok])
        b = np.array([r.baseline_loss for r in members])
        w_mean = float(w.mean()) if w.size else math.nan
        w_std = float(w.std(ddof=1)) if w.size > 1 else 0.0 if w.size else math.nan
        b_std = float(b.std(ddof=1)) if b.size > 1 else 0.0
        out.append({
            "task": key[0], "model": key[1], "p": key[2], "n": key[3], "alpha": key[4],
            "repeats": len(members), "failed": len(members) - len(ok),
            "wgan_mean": w_mean, "wgan_std": w_std,
            "wgan_median": float(np.median(w)) if w.size else math.nan,
            "baseline_mean": float(b.mean()), "baseline_std": b_std, "baseline_median": float(np.median(b)),
            "table_cell": f"{w_mean:.4f}({w_std:.4f}) / {float(b.mean()):.4f}",
        })
    return out


def rows_csv(rows: list[ResultRow], record_time: bool = False) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ROW_FIELDS)
    for r in rows:
        writer.writerow([
            r.task, r.model, r.p, r.n, _fmt(r.alpha), r.seed, _fmt(r.wgan_loss), _fmt(r.baseline_loss),
            _fmt(r.wall_time) if record_time else "NA", r.iters, r.status,
        ])
    return buf.getvalue()


def summary_csv(summary: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_FIELDS)
    for s in summary:
        writer.writerow([_fmt(s[k]) if isinstance(s[k], float) else s[k] for k in SUMMARY_FIELDS])
    return buf.getvalue()


def read_rows(path) -> list[ResultRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        out = []
        for rec in csv.DictReader(fh):
            out.append(ResultRow(
                rec["task"], rec["model"], int(rec["p"]), int(rec["n"]), float(rec["alpha"]), int(rec["seed"]),
                float(rec["wgan_loss"]), float(rec["baseline_loss"]),
                math.nan if rec["wall_time"] == "NA" else float(rec["wall_time"]),
                int(rec["iters"]), rec["status"],
            ))
    return out


def write_outputs(cfg: ExperimentConfig, rows: list[ResultRow], summary: list[dict], out_dir: str) -> None:
    """Write ``rows.csv``, ``summary.csv`` and ``summary.json`` into ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "rows.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write(rows_csv(rows, cfg.record_time))
    with open(os.path.join(out_dir, "summary.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write(summary_csv(summary))
    payload = {
        # the output location is left out so that reruns elsewhere compare equal
        "config": {k: v for k, v in asdict(cfg).items() if k != "out"},
        "summary": summary,
        "rows": [asdict(r) if cfg.record_time else {**asdict(r), "wall_time": None} for r in rows],
    }
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, allow_nan=True)
        fh.write("\n")


def theory_curves_csv(p_grid, n_grid, L: int, eps_grid, C: float, variant: str = "dense", k: int | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["p", "n", "L", "eps", "C", "bound"])
    for p in p_grid:
        for eps in eps_grid:
            for n in n_grid:
                bound = metrics.theory_bound(p, n, L, eps, C, variant, k)
                writer.writerow([p, n, L, _fmt(eps), _fmt(C), _fmt(bound)])
    return buf.getvalue()


def emit_theory_curves(p_grid, n_grid, L: int, eps_grid, C: float, path, variant: str = "dense", k: int | None = None) -> str:
    """Write bound values over the grid to ``path`` as CSV; returns the path."""
    text = theory_curves_csv(p_grid, n_grid, L, eps_grid, C, variant, k)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path
