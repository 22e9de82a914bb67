"""Scalar-output ReLU network trained with the two-class softmax loss.

The network maps an input row x to one real value z. Class probabilities are
``p0 = e^(1-z) / (e^z + e^(1-z))`` and ``p1 = e^z / (e^z + e^(1-z))``, which
is a softmax over the logit pair ``(1 - z, z)``. Everything here is plain
numpy in float64; parameters and optimizer state are value types and every
update returns fresh arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation, EmptyInputError, InvalidDimensionError

HIDDEN_SIZES = (256, 128, 128)
LN2 = math.log(2.0)


class MlpParams:
    """Weights ``W[k]`` of shape (fan_in, fan_out) and biases ``b[k]`` of shape (fan_out,).

    All arrays are views into one contiguous ``flat`` buffer so optimizer
    updates can run as a single vectorized operation.
    """

    def __init__(self, flat: np.ndarray, sizes):
        self.flat = flat
        self.sizes = tuple(int(s) for s in sizes)
        self.weights, self.biases = [], []
        pos = 0
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            n = fan_in * fan_out
            self.weights.append(flat[pos : pos + n].reshape(fan_in, fan_out))
            pos += n
            self.biases.append(flat[pos : pos + fan_out])
            pos += fan_out
        if pos != flat.size:
            raise InvalidDimensionError(f"flat buffer has {flat.size} entries, layout needs {pos}")

    @staticmethod
    def layout_size(sizes) -> int:
        return sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:]))

    @classmethod
    def zeros(cls, sizes) -> "MlpParams":
        return cls(np.zeros(cls.layout_size(sizes)), sizes)

    @classmethod
    def from_layers(cls, weights, biases) -> "MlpParams":
        sizes = [weights[0].shape[0]] + [w.shape[1] for w in weights]
        flat = np.concatenate(
            [np.concatenate([np.ravel(w), np.ravel(b)]) for w, b in zip(weights, biases)]
        ).astype(np.float64)
        return cls(flat, sizes)

    @property
    def input_dim(self) -> int:
        return self.sizes[0]

    def arrays(self) -> list[np.ndarray]:
        """Flat list of views [W0, b0, W1, b1, ...]."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def like(self, flat: np.ndarray) -> "MlpParams":
        """New parameter set with this layout over ``flat``."""
        return MlpParams(flat, self.sizes)

    def copy(self) -> "MlpParams":
        return MlpParams(self.flat.copy(), self.sizes)

    def n_params(self) -> int:
        return self.flat.size

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.flat).all())

    def __repr__(self):
        return f"MlpParams(sizes={self.sizes})"


@dataclass
class AdamState:
    """First/second moment buffers laid out like ``MlpParams.flat``."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params: MlpParams, beta1=0.9, beta2=0.999, eps=1e-8) -> "AdamState":
        return cls(np.zeros_like(params.flat), np.zeros_like(params.flat), 0, beta1, beta2, eps)

    def copy(self) -> "AdamState":
        return AdamState(self.m.copy(), self.v.copy(), self.step, self.beta1, self.beta2, self.eps)


@dataclass
class ForwardCache:
    params: MlpParams
    inputs: np.ndarray
    pre: list[np.ndarray] = field(default_factory=list)
    acts: list[np.ndarray] = field(default_factory=list)

    @property
    def n_rows(self) -> int:
        return self.inputs.shape[0]


@dataclass(frozen=True)
class Checkpoint:
    params: MlpParams
    state: AdamState | None


def init_params(input_dim: int, seed: int, hidden=HIDDEN_SIZES) -> MlpParams:
    """Uniform(-a, a) weights with ``a = sqrt(6 / fan_in)``; zero biases."""
    if int(input_dim) < 1:
        raise InvalidDimensionError(f"input_dim must be >= 1, got {input_dim}")
    rng = np.random.default_rng(seed)
    params = MlpParams.zeros([int(input_dim), *hidden, 1])
    for w in params.weights:
        bound = math.sqrt(6.0 / w.shape[0])
        w[...] = rng.uniform(-bound, bound, size=w.shape)
    return params


def _check_input(params: MlpParams, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != params.input_dim:
        raise InvalidDimensionError(
            f"expected input with {params.input_dim} columns, got shape {X.shape}"
        )
    return X


def forward(params: MlpParams, X) -> tuple[np.ndarray, ForwardCache]:
    X = _check_input(params, X)
    cache = ForwardCache(params=params, inputs=X)
    a = X
    last = len(params.weights) - 1
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = a @ w + b
        cache.pre.append(h)
        a = h if k == last else np.maximum(h, 0.0)
        cache.acts.append(a)
    return a[:, 0], cache


def output(params: MlpParams, X) -> np.ndarray:
    """Network output z for each row, without keeping a cache."""
    return forward(params, X)[0]


def softmax_probs(z):
    """Return (p0, p1); works elementwise on arrays."""
    z = np.asarray(z, dtype=np.float64)
    a, b = 1.0 - z, z
    top = np.maximum(a, b)
    ea = np.exp(a - top)
    eb = np.exp(b - top)
    denom = ea + eb
    p0, p1 = ea / denom, eb / denom
    if p0.ndim == 0:
        return float(p0), float(p1)
    return p0, p1


def predict(z):
    """0 when ``e^(1-z) >= e^z`` (i.e. z <= 0.5), else 1."""
    z = np.asarray(z, dtype=np.float64)
    out = (z > 0.5).astype(np.int64)
    return int(out) if out.ndim == 0 else out


def per_sample_loss(z, y):
    """Cross-entropy ``-log p_y`` in closed form.

    y = 0 gives ``log(1 + e^(2z-1))``; y = 1 gives ``log(1 + e^(1-2z))``.
    """
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y)
    margin = np.where(y == 1, 1.0 - 2.0 * z, 2.0 * z - 1.0)
    out = np.logaddexp(0.0, margin)
    return float(out) if out.ndim == 0 else out


def _sigmoid(x):
    return np.exp(-np.logaddexp(0.0, -x))


def loss_grad_z(z, y):
    """d loss / d z = 2 * (p1 - y)."""
    return 2.0 * (_sigmoid(2.0 * np.asarray(z) - 1.0) - np.asarray(y))


def sample_loss(params: MlpParams, X, y) -> tuple[float, np.ndarray]:
    """Mean loss over a sample and the per-row losses.

    Rows are returned in the order given; callers that want the
    minority-first convention must order ``X`` and ``y`` that way.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyInputError("sample loss needs at least one row")
    z, _ = forward(params, X)
    losses = per_sample_loss(z, y)
    return float(np.mean(losses)), losses


def backward(params: MlpParams, cache: ForwardCache, X, y) -> MlpParams:
    """Gradient of the batch-mean loss, shaped like ``params``."""
    if cache.params is not params:
        raise ContractViolation("cache was produced by a different parameter set")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    n = cache.n_rows
    if X.shape != cache.inputs.shape or y.shape[0] != n or not np.array_equal(X, cache.inputs):
        raise ContractViolation("batch does not match the forward cache")

    z = cache.acts[-1][:, 0]
    delta = (loss_grad_z(z, y) / n).reshape(-1, 1)
    grads = MlpParams.zeros(params.sizes)
    for k in range(len(params.weights) - 1, -1, -1):
        below = cache.acts[k - 1] if k > 0 else cache.inputs
        np.matmul(below.T, delta, out=grads.weights[k])
        np.sum(delta, axis=0, out=grads.biases[k])
        if k > 0:
            delta = (delta @ params.weights[k].T) * (cache.pre[k - 1] > 0.0)
    return grads


def loss_and_grad(params: MlpParams, X, y) -> tuple[float, np.ndarray, MlpParams]:
    z, cache = forward(params, X)
    losses = per_sample_loss(z, y)
    return float(np.mean(losses)), losses, backward(params, cache, cache.inputs, y)


def grad_norm(grads) -> float:
    """Global L2 norm over every entry of ``grads`` (an MlpParams or a list of arrays)."""
    if isinstance(grads, MlpParams):
        return float(np.linalg.norm(grads.flat))
    return math.sqrt(sum(float(np.vdot(a, a)) for a in grads))


def adam_step(params: MlpParams, grads: MlpParams, state: AdamState, lr: float):
    """One bias-corrected Adam update. Returns new ``(params, state)``."""
    if params.sizes != grads.sizes or state.m.shape != params.flat.shape:
        raise InvalidDimensionError(
            f"layout mismatch: params {params.sizes}, grads {grads.sizes}, state {state.m.shape}"
        )
    b1, b2, eps = state.beta1, state.beta2, state.eps
    t = state.step + 1
    g = grads.flat
    m = state.m * b1
    m += (1.0 - b1) * g
    v = g * g
    v *= 1.0 - b2
    v += b2 * state.v
    denom = v / (1.0 - b2**t)
    np.sqrt(denom, out=denom)
    denom += eps
    step = m * (lr / (1.0 - b1**t))
    step /= denom
    return params.like(params.flat - step), AdamState(m, v, t, b1, b2, eps)


def snapshot(params: MlpParams, state: AdamState | None = None) -> Checkpoint:
    return Checkpoint(params.copy(), None if state is None else state.copy())


def restore(checkpoint: Checkpoint) -> tuple[MlpParams, AdamState | None]:
    state = checkpoint.state
    return checkpoint.params.copy(), None if state is None else state.copy()


def _same_bits(a: np.ndarray, b: np.ndarray) -> bool:
    return a.shape == b.shape and a.dtype == b.dtype and a.tobytes() == b.tobytes()


def params_equal(a: MlpParams, b: MlpParams) -> bool:
    """Bitwise equality of two parameter sets."""
    return a.sizes == b.sizes and _same_bits(a.flat, b.flat)


def states_equal(a: AdamState, b: AdamState) -> bool:
    return (a.step, a.beta1, a.beta2, a.eps) == (b.step, b.beta1, b.beta2, b.eps) and (
        _same_bits(a.m, b.m) and _same_bits(a.v, b.v)
    )
