"""Dataset loading, stratified splitting, standardization and class partitioning."""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateDataError, ParseError, SchemaError

log = logging.getLogger(__name__)


@dataclass
class Dataset:
    """Feature matrix with binary labels; label 1 is the minority class."""

    features: np.ndarray
    labels: np.ndarray
    feature_names: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise SchemaError(f"features must be 2-D, got shape {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise SchemaError("labels must be a vector with one entry per feature row")
        if not np.isin(self.labels, (0, 1)).all():
            raise SchemaError("labels must be 0 or 1")
        if not self.feature_names:
            self.feature_names = [f"x{i}" for i in range(self.features.shape[1])]

    def __len__(self):
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], list(self.feature_names))

    def minority_fraction(self) -> float:
        return float(self.labels.mean())


@dataclass(frozen=True)
class ClassPartition:
    minority_indices: np.ndarray
    majority_indices: np.ndarray

    @property
    def m(self) -> int:
        return len(self.minority_indices)

    @property
    def M(self) -> int:
        return len(self.majority_indices)


@dataclass(frozen=True)
class StandardizationStats:
    mean: np.ndarray
    std: np.ndarray

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.std

    def inverse_transform(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) * self.std + self.mean


def load_csv(path, label_column: str, positive_label: str) -> Dataset:
    """Read a header-first CSV; rows whose label equals ``positive_label`` become 1.

    If the positive class turns out to be the larger one the labels are
    flipped, so label 1 always marks the minority class.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: file is empty") from None
        if label_column not in header:
            raise SchemaError(f"{path}: label column {label_column!r} not in header {header}")
        label_pos = header.index(label_column)
        names = [h for i, h in enumerate(header) if i != label_pos]

        rows, labels = [], []
        # data rows are numbered from 2 so they match line numbers in the file
        for lineno, record in enumerate(reader, start=2):
            if not record or all(not c.strip() for c in record):
                continue
            if len(record) != len(header):
                raise SchemaError(
                    f"{path}: row {lineno} has {len(record)} fields, header has {len(header)}"
                )
            values = []
            for i, cell in enumerate(record):
                if i == label_pos:
                    continue
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(path, lineno, header[i], cell) from None
                if math.isnan(v):
                    raise ParseError(path, lineno, header[i], cell)
                values.append(v)
            rows.append(values)
            labels.append(record[label_pos].strip() == str(positive_label).strip())

    y = np.asarray(labels, dtype=np.int64)
    X = np.asarray(rows, dtype=np.float64).reshape(len(rows), len(names))
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == len(y):
        raise DegenerateDataError(f"{path}: only one class present after mapping labels")

    notes = []
    if n_pos > len(y) - n_pos:
        msg = (
            f"{path}: label {positive_label!r} is the majority class "
            f"({n_pos} of {len(y)}); flipping so the minority class is 1"
        )
        warnings.warn(msg, UserWarning, stacklevel=2)
        log.warning(msg)
        notes.append(msg)
        y = 1 - y
    return Dataset(X, y, names, notes)


def partition_classes(ds: Dataset) -> ClassPartition:
    minority = np.flatnonzero(ds.labels == 1)
    majority = np.flatnonzero(ds.labels == 0)
    if len(minority) == 0 or len(majority) == 0:
        raise DegenerateDataError("both classes must be present")
    return ClassPartition(minority, majority)


def _test_quotas(class_sizes, test_fraction):
    """Per-class test counts: floor of the exact share, then largest remainder."""
    total = sum(class_sizes)
    n_test = int(math.floor(total * test_fraction + 0.5))
    n_test = min(max(n_test, 1), total - len(class_sizes))
    exact = [n * test_fraction for n in class_sizes]
    quotas = [min(int(math.floor(e)), n - 1) for e, n in zip(exact, class_sizes)]
    # remaining slots go to the largest fractional parts; ties go to the lower class label
    order = sorted(range(len(class_sizes)), key=lambda c: (-(exact[c] - math.floor(exact[c])), c))
    remaining = n_test - sum(quotas)
    while remaining > 0:
        progressed = False
        for c in order:
            if remaining == 0:
                break
            if quotas[c] < class_sizes[c] - 1:
                quotas[c] += 1
                remaining -= 1
                progressed = True
        if not progressed:
            break
    return quotas


def stratified_split(ds: Dataset, test_fraction: float, seed) -> tuple[Dataset, Dataset]:
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    part = partition_classes(ds)
    groups = [part.majority_indices, part.minority_indices]
    if min(len(g) for g in groups) < 2:
        raise DegenerateDataError("each class needs at least 2 rows to split")

    rng = np.random.default_rng(seed)
    quotas = _test_quotas([len(g) for g in groups], test_fraction)
    train_idx, test_idx = [], []
    for g, q in zip(groups, quotas):
        perm = rng.permutation(g)
        test_idx.append(perm[:q])
        train_idx.append(perm[q:])
    train_idx = np.sort(np.concatenate(train_idx))
    test_idx = np.sort(np.concatenate(test_idx))
    return ds.subset(train_idx), ds.subset(test_idx)


def standardize(train: Dataset, test: Dataset | None = None):
    """Scale features with training-set mean and population std.

    Returns ``(train', test', stats)``; ``test'`` is None when no test set is given.
    """
    if len(train) == 0:
        raise DegenerateDataError("cannot standardize an empty training set")
    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0)
    std = np.where(std > 0.0, std, 1.0)
    stats = StandardizationStats(mean, std)
    new_train = Dataset(stats.transform(train.features), train.labels.copy(), list(train.feature_names))
    new_test = None
    if test is not None:
        new_test = Dataset(stats.transform(test.features), test.labels.copy(), list(test.feature_names))
    return new_train, new_test, stats
