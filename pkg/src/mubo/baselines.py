"""Rebalancing strategies that share the MUBO inner learner."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from sklearn.neighbors import NearestNeighbors

from .bilevel import MuboConfig, MuboResult, run_mubo
from .data import Dataset, partition_classes
from .errors import InsufficientMinorityError

log = logging.getLogger(__name__)


class RebalanceMethod(str, Enum):
    NONE = "none"
    RANDOM_UNDERSAMPLE = "random_undersample"
    SMOTE = "smote"
    MUBO = "mubo"

    @classmethod
    def parse(cls, value) -> "RebalanceMethod":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"w/o": "none", "without": "none", "rus": "random_undersample", "random": "random_undersample"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown method {value!r}; choose from {[m.value for m in cls]}") from None


@dataclass
class Rebalanced:
    """Training rows after rebalancing.

    ``mubo`` is set only for the bilevel method and carries the model that
    emerged from the outer loop plus its trace.
    """

    features: np.ndarray
    labels: np.ndarray
    n_synthetic: int = 0
    mubo: MuboResult | None = None

    def class_counts(self) -> tuple[int, int]:
        ones = int(self.labels.sum())
        return len(self.labels) - ones, ones


def random_undersample(majority_indices, m: int, seed) -> np.ndarray:
    majority_indices = np.asarray(majority_indices, dtype=np.int64)
    if len(majority_indices) < m:
        msg = f"only {len(majority_indices)} majority rows for m={m}; keeping all of them"
        warnings.warn(msg, UserWarning, stacklevel=2)
        log.warning(msg)
        return majority_indices.copy()
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(majority_indices, size=m, replace=False))


def smote_neighbors(X: np.ndarray, k: int) -> np.ndarray:
    """Indices of each row's k nearest other rows (Euclidean), shape (m, k)."""
    nn = NearestNeighbors(n_neighbors=k + 1).fit(X)
    idx = nn.kneighbors(X, return_distance=False)
    out = np.empty((len(X), k), dtype=np.int64)
    for i, row in enumerate(idx):
        # duplicates can push a row's own index out of first place
        others = row[row != i]
        out[i] = others[:k]
    return out


def smote(minority_features, n_synthetic: int, k: int = 5, seed=None) -> np.ndarray:
    """Classic SMOTE: ``x + u * (neighbor - x)`` with ``u ~ U(0, 1)``.

    ``k`` is clamped to ``m - 1``.
    """
    X = np.asarray(minority_features, dtype=np.float64)
    m = len(X)
    if m < 2:
        raise InsufficientMinorityError(f"SMOTE needs at least 2 minority rows, got {m}")
    if k < 1:
        raise ValueError("k must be >= 1")
    if n_synthetic <= 0:
        return np.empty((0, X.shape[1]))
    k = min(k, m - 1)
    neighbors = smote_neighbors(X, k)
    rng = np.random.default_rng(seed)
    base = rng.integers(0, m, size=n_synthetic)
    pick = neighbors[base, rng.integers(0, k, size=n_synthetic)]
    gap = rng.random(n_synthetic)[:, None]
    return X[base] + gap * (X[pick] - X[base])


def apply_method(method, train: Dataset, cfg: MuboConfig | None = None, seed=None, k: int = 5) -> Rebalanced:
    method = RebalanceMethod.parse(method)
    cfg = cfg or MuboConfig()
    part = partition_classes(train)

    if method is RebalanceMethod.NONE:
        return Rebalanced(train.features.copy(), train.labels.copy())

    if method is RebalanceMethod.RANDOM_UNDERSAMPLE:
        kept = random_undersample(part.majority_indices, part.m, seed)
        rows = np.concatenate([part.minority_indices, kept])
        return Rebalanced(train.features[rows], train.labels[rows])

    if method is RebalanceMethod.SMOTE:
        n_new = max(part.M - part.m, 0)
        synth = smote(train.features[part.minority_indices], n_new, k=k, seed=seed)
        X = np.vstack([train.features, synth])
        y = np.concatenate([train.labels, np.ones(len(synth), dtype=np.int64)])
        return Rebalanced(X, y, n_synthetic=len(synth))

    result = run_mubo(train, cfg, seed)
    rows = result.indices
    return Rebalanced(train.features[rows], train.labels[rows], mubo=result)
