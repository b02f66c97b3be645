"""Robust location, scatter and regression estimation with constrained W-GAN critics."""
from . import audit, baselines, core_math, discriminator, distributions, experiment, generators, metrics, optimizer, training
from ._backend import NAME as BACKEND
from .core_math import RngStream
from .errors import DivergedTrainingError, InvalidInputError, InvalidStateError, NotPositiveDefiniteError
from .training import TrainConfig, TrainReport, train

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DivergedTrainingError",
    "InvalidInputError",
    "InvalidStateError",
    "NotPositiveDefiniteError",
    "RngStream",
    "TrainConfig",
    "TrainReport",
    "audit",
    "baselines",
    "core_math",
    "discriminator",
    "distributions",
    "experiment",
    "generators",
    "metrics",
    "optimizer",
    "train",
    "training",
]
