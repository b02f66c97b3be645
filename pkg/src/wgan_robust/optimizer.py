"""RMSprop with caller-side projection, and the batch-size schedule."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError


@dataclass
class RmsPropState:
    """Running mean of squared gradients, one accumulator per named parameter."""

    lr: float = 0.005
    decay: float = 0.9
    eps: float = 1e-8
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if not self.lr > 0 or not 0 < self.decay < 1 or not self.eps > 0:
            raise InvalidInputError("need lr > 0, 0 < decay < 1, eps > 0")


def rmsprop_step(state: RmsPropState, params: dict[str, np.ndarray], grads: dict[str, np.ndarray], direction: str = "descent"):
    """Update ``params`` in place and return them.

    ``v <- decay * v + (1 - decay) * g**2`` and
    ``param <- param -/+ lr * g / (sqrt(v) + eps)`` for descent/ascent.
    """
    if direction not in ("ascent", "descent"):
        raise InvalidInputError(f"direction must be 'ascent' or 'descent', got {direction!r}")
    sign = 1.0 if direction == "ascent" else -1.0
    for name, g in grads.items():
        if g is None:
            continue
        p = params[name]
        if p.shape != g.shape:
            raise InvalidInputError(f"gradient for {name} has shape {g.shape}, parameter {p.shape}")
        v = state.v.get(name)
        if v is None:
            v = np.zeros_like(p)
        elif v.shape != p.shape:
            raise InvalidInputError(f"accumulator for {name} has shape {v.shape}, parameter {p.shape}")
        # overflow shows up as non-finite parameters, which the caller checks
        with np.errstate(over="ignore", invalid="ignore"):
            v *= state.decay
            v += (1.0 - state.decay) * g * g
            p += sign * state.lr * g / (np.sqrt(v) + state.eps)
        state.v[name] = v
    return params


def batch_size_for(n: int) -> int:
    """32 up to n=1000 (exclusive), 128 up to 5000, 256 beyond."""
    if n < 1:
        raise InvalidInputError("n must be positive")
    if n < 1000:
        return 32
    if n <= 5000:
        return 128
    return 256
