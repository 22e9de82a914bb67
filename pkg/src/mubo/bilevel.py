"""Majority undersampling by bilevel accept/reject selection.

The outer loop proposes small random batches ("micro-samples") of majority
rows, warm-starts training on all minority rows plus the accepted majority
rows plus the proposal, and keeps the proposal only when the majority share
of the training loss does not increase. Rejected proposals are rolled back
completely: model weights, optimizer moments, the accepted set, and the
reference loss all return to their pre-proposal values.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from . import nn
from .data import Dataset, partition_classes
from .errors import ContractViolation, DivergenceError, InvalidInputError, PoolExhausted

log = logging.getLogger(__name__)


@dataclass
class MuboConfig:
    max_iter: int = 50
    grad_tol: float = 1e-3
    max_epochs: int = 20
    batch_size: int = 32
    learning_rate: float = 1e-4
    initial_majority_loss: float = 10.0

    def __post_init__(self):
        if self.max_iter < 0:
            raise ValueError("max_iter must be >= 0")
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be > 0")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")

    def to_dict(self) -> dict:
        return asdict(self)


class Decision(str, Enum):
    ACCEPT = "accept"
    REJECT = "reject"


@dataclass
class InnerResult:
    params: nn.MlpParams
    state: nn.AdamState
    losses: np.ndarray
    epochs: int
    grad_norm: float


@dataclass
class OuterTraceEntry:
    t: int
    proposed: list[int]
    micro_size: int
    prev_set_size: int
    majority_loss: float
    accepted: bool
    epochs: int
    grad_norm: float

    def to_json(self) -> str:
        return json.dumps(asdict(self))


@dataclass
class MuboState:
    accepted: list[int]
    pool: list[int]
    previous_majority_loss: float
    t: int
    params: nn.MlpParams
    adam: nn.AdamState
    next_micro_size: int


@dataclass
class MuboResult:
    """Selected training rows (minority first), the final model, and the trace."""

    indices: np.ndarray
    params: nn.MlpParams
    adam: nn.AdamState
    trace: list[OuterTraceEntry] = field(default_factory=list)
    stop_reason: str = "max_iter"

    @property
    def accepted_majority(self) -> int:
        return sum(len(e.proposed) for e in self.trace if e.accepted)


def micro_size(prev_set_size: int, m: int) -> int:
    """Size of the next proposal: ceil(m/10) while the set is small, then ceil(m/100)."""
    if m < 1:
        raise InvalidInputError("m must be >= 1")
    # compare 4 * |S| <= 7 * m in integers to keep the 7/4 boundary exact
    if 4 * prev_set_size <= 7 * m:
        return max(1, -(-m // 10))
    return max(1, -(-m // 100))


def draw_micro_sample(pool, size: int, rng: np.random.Generator) -> list[int]:
    pool = list(pool)
    if not pool:
        raise PoolExhausted("no majority candidates left")
    k = min(int(size), len(pool))
    picks = rng.choice(len(pool), size=k, replace=False)
    return [pool[i] for i in picks]


def majority_loss(per_sample_losses, m: int) -> float:
    """Sum of losses past the first ``m`` (minority) entries, divided by the full length."""
    losses = np.asarray(per_sample_losses, dtype=np.float64)
    if losses.ndim != 1 or len(losses) <= m:
        raise InvalidInputError(f"need more than m={m} losses, got {losses.shape}")
    return float(losses[m:].sum() / len(losses))


def check_step(j_t: float, j_prev: float) -> Decision:
    if math.isnan(j_t) or math.isnan(j_prev):
        raise ContractViolation("majority loss comparison received NaN")
    return Decision.REJECT if j_t > j_prev else Decision.ACCEPT


def inner_loop(
    params: nn.MlpParams,
    adam: nn.AdamState,
    X: np.ndarray,
    y: np.ndarray,
    cfg: MuboConfig,
    rng: np.random.Generator,
) -> InnerResult:
    """Shuffled mini-batch Adam until the full-sample gradient norm drops to
    ``grad_tol`` (checked at epoch boundaries) or ``max_epochs`` is reached.

    The returned losses are evaluated at the final weights over every row
    of ``(X, y)`` in the order given.
    """
    n = X.shape[0]
    epochs = 0
    loss, losses, grads = nn.loss_and_grad(params, X, y)
    if not math.isfinite(loss):
        raise DivergenceError(epochs)
    gnorm = nn.grad_norm(grads)
    while gnorm > cfg.grad_tol and epochs < cfg.max_epochs:
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            _, _, g = nn.loss_and_grad(params, X[idx], y[idx])
            params, adam = nn.adam_step(params, g, adam, cfg.learning_rate)
        epochs += 1
        loss, losses, grads = nn.loss_and_grad(params, X, y)
        if not math.isfinite(loss) or not params.is_finite():
            raise DivergenceError(epochs)
        gnorm = nn.grad_norm(grads)
    return InnerResult(params, adam, losses, epochs, gnorm)


class MuboSelector:
    """Step-by-step driver for the outer loop.

    ``step()`` runs one outer iteration and returns its trace entry, so
    callers (and tests) can inspect ``state`` between iterations.
    """

    def __init__(self, train: Dataset, cfg: MuboConfig, seed, params: nn.MlpParams | None = None):
        part = partition_classes(train)
        self.train = train
        self.cfg = cfg
        self.minority = [int(i) for i in part.minority_indices]
        self.majority = [int(i) for i in part.majority_indices]
        self.m = len(self.minority)

        seq = np.random.SeedSequence(seed)
        init_seq, sample_seq, shuffle_seq = seq.spawn(3)
        self.sample_rng = np.random.default_rng(sample_seq)
        self.shuffle_rng = np.random.default_rng(shuffle_seq)
        if params is None:
            params = nn.init_params(train.n_features, int(init_seq.generate_state(1)[0]))
        self.state = MuboState(
            accepted=[],
            pool=list(self.majority),
            previous_majority_loss=float(cfg.initial_majority_loss),
            t=0,
            params=params,
            adam=nn.AdamState.zeros_like(params),
            next_micro_size=max(1, -(-self.m // 10)),
        )
        self.trace: list[OuterTraceEntry] = []
        self.stop_reason = None

    def selected_indices(self) -> np.ndarray:
        return np.asarray(self.minority + self.state.accepted, dtype=np.int64)

    def done(self) -> bool:
        if self.state.t >= self.cfg.max_iter:
            self.stop_reason = self.stop_reason or "max_iter"
            return True
        if not self.state.pool:
            self.stop_reason = "pool_exhausted"
            return True
        return False

    def step(self) -> OuterTraceEntry:
        st = self.state
        checkpoint = nn.snapshot(st.params, st.adam)
        prev_size = self.m + len(st.accepted)
        size = st.next_micro_size

        proposed = draw_micro_sample(st.pool, size, self.sample_rng)
        rows = np.asarray(self.minority + st.accepted + proposed, dtype=np.int64)
        X = self.train.features[rows]
        y = self.train.labels[rows]

        inner = inner_loop(st.params, st.adam, X, y, self.cfg, self.shuffle_rng)
        j_t = majority_loss(inner.losses, self.m)
        decision = check_step(j_t, st.previous_majority_loss)
        accepted = decision is Decision.ACCEPT

        if accepted:
            taken = set(proposed)
            st.accepted = st.accepted + proposed
            st.pool = [i for i in st.pool if i not in taken]
            st.params, st.adam = inner.params, inner.state
            st.previous_majority_loss = j_t
        else:
            st.params, st.adam = nn.restore(checkpoint)

        entry = OuterTraceEntry(
            t=st.t,
            proposed=[int(i) for i in proposed],
            micro_size=size,
            prev_set_size=prev_size,
            majority_loss=j_t,
            accepted=accepted,
            epochs=inner.epochs,
            grad_norm=inner.grad_norm,
        )
        # the schedule keys on the set size at the start of this iteration
        st.next_micro_size = micro_size(prev_size, self.m)
        st.t += 1
        self.trace.append(entry)
        log.debug(
            "t=%d size=%d J=%.6g %s", entry.t, size, j_t, "accept" if accepted else "reject"
        )
        return entry

    def run(self) -> MuboResult:
        while not self.done():
            self.step()
        return self.result()

    def result(self) -> MuboResult:
        return MuboResult(
            indices=self.selected_indices(),
            params=self.state.params,
            adam=self.state.adam,
            trace=list(self.trace),
            stop_reason=self.stop_reason or "max_iter",
        )


def run_mubo(train: Dataset, cfg: MuboConfig, seed, params: nn.MlpParams | None = None) -> MuboResult:
    return MuboSelector(train, cfg, seed, params=params).run()


def write_trace(trace, path) -> Path:
    """One JSON object per line, one line per outer iteration."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for entry in trace:
            fh.write(entry.to_json() + "\n")
    return path


def read_trace(path) -> list[OuterTraceEntry]:
    with Path(path).open(encoding="utf-8") as fh:
        return [OuterTraceEntry(**json.loads(line)) for line in fh if line.strip()]
