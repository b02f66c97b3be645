"""Norm-constrained critic networks.

A critic is a stack of dense layers: a first layer with a bounded-slope
activation (sigmoid, or ramp for the elliptical class) whose rows obey an
l2 constraint of radius ``B``, ReLU hidden layers and a linear scalar output
whose rows obey an l1 constraint of radius one. Under these constraints the
network is ``B/4``-Lipschitz (sigmoid first layer) and its range has width at
most 2, which is what makes the induced IPM a lower bound on ``B * W1``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from itertools import count

import numpy as np
from scipy.special import expit

from .core_math import RngStream, top_k_indices
from .errors import InvalidInputError, InvalidStateError

_SHRINK = 1.0 - 4 * np.finfo(float).eps


class Activation(str, enum.Enum):
    SIGMOID = "sigmoid"
    RELU = "relu"
    RAMP = "ramp"
    IDENTITY = "identity"


def ramp(u):
    """``2 * clip(u + 1/2, 0, 1)``: slope 2 on ``(-1/2, 1/2)``, range ``[0, 2]``."""
    return 2.0 * np.clip(u + 0.5, 0.0, 1.0)


def _activate(kind: Activation, z: np.ndarray) -> np.ndarray:
    if kind is Activation.SIGMOID:
        return expit(z)
    if kind is Activation.RELU:
        return np.maximum(z, 0.0)
    if kind is Activation.RAMP:
        return ramp(z)
    return z


def _activation_grad(kind: Activation, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    if kind is Activation.SIGMOID:
        return a * (1.0 - a)
    if kind is Activation.RELU:
        # subgradient 0 at exactly 0
        return (z > 0.0).astype(np.float64)
    if kind is Activation.RAMP:
        return np.where((z > -0.5) & (z < 0.5), 2.0, 0.0)
    return np.ones_like(z)


# --- row constraints ------------------------------------------------------------

@dataclass(frozen=True)
class RowL2Ball:
    B: float


@dataclass(frozen=True)
class RowL2Sparse:
    B: float
    k: int


@dataclass(frozen=True)
class RowL2Banded:
    B: float
    width: int


@dataclass(frozen=True)
class RowL1Ball:
    radius: float = 1.0


Constraint = RowL2Ball | RowL2Sparse | RowL2Banded | RowL1Ball


def _row_l2(W):
    return np.linalg.norm(W, axis=1)


def _row_l1(W):
    return np.abs(W).sum(axis=1)


def _shrink_rows(W: np.ndarray, norm, limit: float) -> None:
    """Rescale rows with ``norm(row) > limit`` in place, guaranteeing feasibility after rounding."""
    nrm = norm(W)
    over = nrm > limit
    if not over.any():
        return
    W[over] *= (limit / nrm[over])[:, None]
    over = norm(W) > limit
    while over.any():
        W[over] *= _SHRINK
        over = norm(W) > limit


def best_window(row: np.ndarray, width: int) -> int:
    """Start of the contiguous window of ``width`` entries holding the most l2 mass."""
    sq = row * row
    sums = np.lib.stride_tricks.sliding_window_view(sq, width).sum(axis=1)
    return int(np.argmax(sums))


def project_rows(W: np.ndarray, constraint: Constraint) -> np.ndarray:
    """Truncate each row of ``W`` onto the feasible set of ``constraint`` (returns a copy)."""
    W = np.array(W, dtype=np.float64, copy=True)
    if isinstance(constraint, RowL2Ball):
        _shrink_rows(W, _row_l2, constraint.B)
    elif isinstance(constraint, RowL1Ball):
        _shrink_rows(W, _row_l1, constraint.radius)
    elif isinstance(constraint, RowL2Sparse):
        if constraint.k < W.shape[1]:
            for row in W:
                keep = top_k_indices(row, constraint.k)
                mask = np.ones(row.size, dtype=bool)
                mask[keep] = False
                row[mask] = 0.0
        _shrink_rows(W, _row_l2, constraint.B)
    elif isinstance(constraint, RowL2Banded):
        if constraint.width < W.shape[1]:
            for row in W:
                start = best_window(row, constraint.width)
                row[:start] = 0.0
                row[start + constraint.width:] = 0.0
        _shrink_rows(W, _row_l2, constraint.B)
    else:
        raise InvalidInputError(f"unknown constraint {constraint!r}")
    return W


def is_feasible(W: np.ndarray, constraint: Constraint) -> bool:
    """Exact feasibility check (no tolerance)."""
    if isinstance(constraint, RowL1Ball):
        return bool(np.all(_row_l1(W) <= constraint.radius))
    if not np.all(_row_l2(W) <= constraint.B):
        return False
    if isinstance(constraint, RowL2Sparse):
        return bool(np.all(np.count_nonzero(W, axis=1) <= constraint.k))
    if isinstance(constraint, RowL2Banded):
        for row in W:
            nz = np.flatnonzero(row)
            if nz.size and nz[-1] - nz[0] + 1 > constraint.width:
                return False
    return True


# --- network ----------------------------------------------------------------------

@dataclass
class DenseLayer:
    W: np.ndarray
    b: np.ndarray | None
    activation: Activation
    constraint: Constraint

    @property
    def shape(self) -> tuple[int, int]:
        return self.W.shape


_net_ids = count()


@dataclass
class DiscriminatorNet:
    """Layered critic. ``variant`` is one of 'dense', 'sparse', 'banded', 'elliptical'."""

    layers: list[DenseLayer]
    B: float
    variant: str = "dense"
    version: int = 0
    uid: int = field(default_factory=lambda: next(_net_ids))

    @property
    def input_dim(self) -> int:
        return self.layers[0].W.shape[1]

    @property
    def depth(self) -> int:
        return len(self.layers)

    def lipschitz_bound(self) -> float:
        """Lipschitz constant guaranteed by the constraints."""
        first = self.layers[0].activation
        slope = 2.0 if first is Activation.RAMP else 0.25
        return slope * self.B

    def range_bound(self) -> float:
        """Upper bound on ``|f(x) - f(y)|`` from the first-layer range."""
        return 4.0 if self.layers[0].activation is Activation.RAMP else 2.0

    def params(self) -> dict[str, np.ndarray]:
        out = {}
        for i, layer in enumerate(self.layers):
            out[f"W{i}"] = layer.W
            if layer.b is not None:
                out[f"b{i}"] = layer.b
        return out

    def touch(self) -> None:
        """Mark parameters as modified; invalidates outstanding forward caches."""
        self.version += 1

    def copy(self) -> "DiscriminatorNet":
        layers = [
            DenseLayer(l.W.copy(), None if l.b is None else l.b.copy(), l.activation, l.constraint)
            for l in self.layers
        ]
        return DiscriminatorNet(layers, self.B, self.variant)

    def negated(self) -> "DiscriminatorNet":
        """The critic computing ``-f`` (flip the output row)."""
        net = self.copy()
        net.layers[-1].W = -net.layers[-1].W
        return net


def default_widths(p: int) -> list[int]:
    return [math.ceil(p / 2), math.ceil(p / 4)]


def build(
    p: int,
    B: float = 1.0,
    widths: list[int] | None = None,
    variant: str = "dense",
    *,
    k: int | None = None,
    width: int | None = None,
    rng: RngStream | None = None,
) -> DiscriminatorNet:
    """Construct a feasible critic for ``p``-dimensional inputs.

    ``widths`` lists the hidden layer sizes (default ``ceil(p/2), ceil(p/4)``);
    a scalar output layer is appended. Weights start as Gaussians with
    standard deviation ``1/sqrt(fan_in)`` and are then projected; the
    first-layer bias starts at zero.
    """
    if p < 1:
        raise InvalidInputError("input dimension must be positive")
    if not B > 0:
        raise InvalidInputError("B must be positive")
    widths = default_widths(p) if widths is None else list(widths)
    if not widths or any(int(w) < 1 for w in widths):
        raise InvalidInputError(f"invalid hidden widths {widths}")
    if variant == "dense":
        first = RowL2Ball(B)
    elif variant == "sparse":
        if k is None or not 1 <= k <= p:
            raise InvalidInputError(f"sparse variant needs 1 <= k <= {p}, got {k}")
        first = RowL2Sparse(B, k)
    elif variant == "banded":
        if width is None or not 1 <= width <= p:
            raise InvalidInputError(f"banded variant needs 1 <= width <= {p}, got {width}")
        first = RowL2Banded(B, width)
    elif variant == "elliptical":
        first = RowL2Ball(B)
    else:
        raise InvalidInputError(f"unknown variant {variant!r}")
    rng = rng or RngStream(0, 0)
    first_act = Activation.RAMP if variant == "elliptical" else Activation.SIGMOID

    dims = [p, *[int(w) for w in widths], 1]
    layers = []
    for i, (d_in, d_out) in enumerate(zip(dims[:-1], dims[1:])):
        W = rng.normal((d_out, d_in)) / np.sqrt(d_in)
        if i == 0:
            act, cons, b = first_act, first, np.zeros(d_out)
        elif i == len(dims) - 2:
            act, cons, b = Activation.IDENTITY, RowL1Ball(1.0), None
        else:
            act, cons, b = Activation.RELU, RowL1Ball(1.0), None
        layers.append(DenseLayer(project_rows(W, cons), b, act, cons))
    return DiscriminatorNet(layers, float(B), variant)


@dataclass
class ForwardCache:
    uid: int
    version: int
    inputs: list[np.ndarray]
    pre: list[np.ndarray]
    post: list[np.ndarray]


def forward(net: DiscriminatorNet, X) -> tuple[np.ndarray, ForwardCache]:
    """Evaluate the critic on the rows of ``X``; returns ``(values, cache)``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != net.input_dim:
        raise InvalidInputError(f"expected inputs with {net.input_dim} columns, got shape {X.shape}")
    inputs, pre, post = [], [], []
    a = X
    for layer in net.layers:
        inputs.append(a)
        z = a @ layer.W.T
        if layer.b is not None:
            z = z + layer.b
        a = _activate(layer.activation, z)
        pre.append(z)
        post.append(a)
    return a[:, 0], ForwardCache(net.uid, net.version, inputs, pre, post)


@dataclass
class LayerGrad:
    W: np.ndarray
    b: np.ndarray | None


def backward(net: DiscriminatorNet, cache: ForwardCache, upstream) -> tuple[list[LayerGrad], np.ndarray]:
    """Gradients of ``sum_j upstream[j] * f(x_j)``.

    Returns per-layer parameter gradients and the ``n x p`` matrix whose row
    ``i`` is the gradient with respect to ``x_i``.
    """
    if cache.uid != net.uid or cache.version != net.version:
        raise InvalidStateError("forward cache does not match the current network parameters")
    upstream = np.asarray(upstream, dtype=np.float64)
    n = cache.inputs[0].shape[0]
    if upstream.shape != (n,):
        raise InvalidInputError(f"upstream must have shape ({n},), got {upstream.shape}")
    delta = upstream[:, None]
    grads: list[LayerGrad] = []
    for layer, a_in, z, a in zip(reversed(net.layers), reversed(cache.inputs), reversed(cache.pre), reversed(cache.post)):
        dz = delta * _activation_grad(layer.activation, z, a)
        gW = dz.T @ a_in
        gb = dz.sum(axis=0) if layer.b is not None else None
        grads.append(LayerGrad(gW, gb))
        delta = dz @ layer.W
    grads.reverse()
    return grads, delta


def project(net: DiscriminatorNet, *, inplace: bool = False) -> DiscriminatorNet:
    """Truncate every layer onto its constraint set; biases are untouched."""
    out = net if inplace else net.copy()
    for layer in out.layers:
        layer.W = project_rows(layer.W, layer.constraint)
    out.touch()
    return out


def revive_dead_units(net: DiscriminatorNet, cache: ForwardCache, rng: RngStream) -> list[tuple[int, int]]:
    """Redraw incoming weights of ReLU units that were inactive on every row of ``cache``.

    A ReLU unit whose pre-activation is nonpositive on the whole batch has
    zero gradient and stays dead; its row is replaced by a fresh feasible
    Gaussian draw. Returns the ``(layer, unit)`` pairs that were reset.
    """
    revived = []
    for i, (layer, z) in enumerate(zip(net.layers, cache.pre)):
        if layer.activation is not Activation.RELU:
            continue
        dead = np.flatnonzero(np.all(z <= 0.0, axis=0))
        if dead.size == 0:
            continue
        d_in = layer.W.shape[1]
        fresh = np.abs(rng.normal((dead.size, d_in))) / np.sqrt(d_in)
        layer.W[dead] = project_rows(fresh, layer.constraint)
        revived.extend((i, int(u)) for u in dead)
    if revived:
        net.touch()
    return revived


def is_projected(net: DiscriminatorNet) -> bool:
    return all(is_feasible(l.W, l.constraint) for l in net.layers)


def audit_lipschitz(net: DiscriminatorNet, trials: int, rng: RngStream) -> float:
    """Largest observed ``|f(x) - f(y)| / |x - y|`` over random pairs.

    Half of the pairs are near (separation 1e-4 to 1e-1), half far
    (separation 0.1 to 30); base points are spread at several scales so
    that both the saturated and the linear regime of the first layer are
    probed.
    """
    p = net.input_dim
    scales = np.array([0.1, 1.0, 5.0])[rng.integers(3, trials)]
    x = rng.normal((trials, p)) * scales[:, None]
    near = np.arange(trials) < trials // 2
    log_sep = np.where(near, rng.uniform(trials) * 3.0 - 4.0, rng.uniform(trials) * np.log10(300.0) - 1.0)
    direction = rng.normal((trials, p))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    y = x + (10.0 ** log_sep)[:, None] * direction
    fx, _ = forward(net, x)
    fy, _ = forward(net, y)
    dist = np.linalg.norm(x - y, axis=1)
    ok = dist > 0
    if not ok.any():
        return 0.0
    return float(np.max(np.abs(fx - fy)[ok] / dist[ok]))


# --- serialization ------------------------------------------------------------------

_MAGIC = "wgan-robust-net 1"


def _constraint_tag(c: Constraint) -> str:
    if isinstance(c, RowL2Ball):
        return f"l2 {c.B!r}"
    if isinstance(c, RowL2Sparse):
        return f"l2sparse {c.B!r} {c.k}"
    if isinstance(c, RowL2Banded):
        return f"l2banded {c.B!r} {c.width}"
    return f"l1 {c.radius!r}"


def _parse_constraint(tokens: list[str]) -> Constraint:
    tag = tokens[0]
    if tag == "l2":
        return RowL2Ball(float(tokens[1]))
    if tag == "l2sparse":
        return RowL2Sparse(float(tokens[1]), int(tokens[2]))
    if tag == "l2banded":
        return RowL2Banded(float(tokens[1]), int(tokens[2]))
    if tag == "l1":
        return RowL1Ball(float(tokens[1]))
    raise InvalidInputError(f"unknown constraint tag {tag!r}")


def dumps(net: DiscriminatorNet) -> str:
    """Text serialization; floats are written with ``repr`` so they round-trip exactly.

    Layout::

        wgan-robust-net 1
        B <float> variant <name> layers <count>
        layer <d_out> <d_in> <activation> bias <0|1> constraint <tag> <args...>
        <d_out lines of d_in weights, row-major>
        [<one line of d_out biases>]
    """
    lines = [_MAGIC, f"B {net.B!r} variant {net.variant} layers {net.depth}"]
    for layer in net.layers:
        d_out, d_in = layer.W.shape
        has_b = int(layer.b is not None)
        lines.append(
            f"layer {d_out} {d_in} {layer.activation.value} bias {has_b} constraint {_constraint_tag(layer.constraint)}"
        )
        lines.extend(" ".join(repr(float(v)) for v in row) for row in layer.W)
        if layer.b is not None:
            lines.append(" ".join(repr(float(v)) for v in layer.b))
    return "\n".join(lines) + "\n"


def loads(text: str) -> DiscriminatorNet:
    try:
        return _loads(text)
    except (StopIteration, IndexError, ValueError) as exc:
        if isinstance(exc, InvalidInputError):
            raise
        raise InvalidInputError(f"malformed critic text: {exc or 'unexpected end of input'}") from None


def _loads(text: str) -> DiscriminatorNet:
    lines = iter(text.splitlines())
    if next(lines).strip() != _MAGIC:
        raise InvalidInputError("not a serialized critic")
    head = next(lines).split()
    B, variant, depth = float(head[1]), head[3], int(head[5])
    layers = []
    for _ in range(depth):
        tok = next(lines).split()
        d_out, d_in, act, has_b = int(tok[1]), int(tok[2]), Activation(tok[3]), tok[5] == "1"
        cons = _parse_constraint(tok[7:])
        W = np.array([[float(v) for v in next(lines).split()] for _ in range(d_out)]).reshape(d_out, d_in)
        b = np.array([float(v) for v in next(lines).split()]) if has_b else None
        if b is not None and b.shape != (d_out,):
            raise InvalidInputError(f"bias line has {b.size} entries, expected {d_out}")
        layers.append(DenseLayer(W, b, act, cons))
    return DiscriminatorNet(layers, B, variant)


def save(net: DiscriminatorNet, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(dumps(net))


def load(path) -> DiscriminatorNet:
    with open(path, encoding="ascii") as fh:
        return loads(fh.read())
