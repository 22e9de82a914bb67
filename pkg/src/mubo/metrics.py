"""Confusion counts, per-class/averaged F1, precision, recall, and loss decompositions.

Label 1 is the minority (positive) class. A ratio whose denominator is zero
is reported as ``None`` rather than 0 or 1, and any average involving a
``None`` is itself ``None``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fn: int
    fp: int
    tn: int

    @property
    def m(self) -> int:
        return self.tp + self.fn

    @property
    def M(self) -> int:
        return self.tn + self.fp

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn

    def check_sizes(self, m: int, M: int) -> None:
        if self.m != m or self.M != M:
            raise InvalidInputError(
                f"counts give m={self.m}, M={self.M}; expected m={m}, M={M}"
            )


@dataclass(frozen=True)
class MetricsReport:
    f1_m: float | None
    f1_M: float | None
    f1: float | None
    prec_m: float | None
    prec_M: float | None
    precision: float | None
    rec_m: float | None
    rec_M: float | None
    recall: float | None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LossBreakdown:
    J_m: float | None
    J_M: float | None
    J_T_M: float | None
    J_F_M: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def _ratio(num, den):
    return None if den == 0 else num / den


def _mean2(a, b):
    return None if a is None or b is None else (a + b) / 2.0


def _aligned(*vectors):
    arrays = [np.asarray(v).ravel() for v in vectors]
    n = len(arrays[0])
    if n == 0 or any(len(a) != n for a in arrays):
        raise InvalidInputError(f"vectors must be non-empty and equal length, got {[len(a) for a in arrays]}")
    return arrays


def confusion(predictions, labels) -> ConfusionCounts:
    pred, lab = _aligned(predictions, labels)
    pred = pred.astype(bool)
    lab = lab.astype(bool)
    tp = int(np.count_nonzero(pred & lab))
    fn = int(np.count_nonzero(~pred & lab))
    fp = int(np.count_nonzero(pred & ~lab))
    tn = int(np.count_nonzero(~pred & ~lab))
    return ConfusionCounts(tp, fn, fp, tn)


def f1_scores(c: ConfusionCounts):
    """(F1_m, F1_M, F1) with F1 the plain mean of the two per-class scores."""
    f1_m = _ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn)
    f1_M = _ratio(2 * c.tn, 2 * c.tn + c.fn + c.fp)
    return f1_m, f1_M, _mean2(f1_m, f1_M)


def precision_recall(c: ConfusionCounts):
    """(Prec_m, Prec_M, Precision, Rec_m, Rec_M, Recall)."""
    prec_m = _ratio(c.tp, c.tp + c.fp)
    prec_M = _ratio(c.tn, c.tn + c.fn)
    rec_m = _ratio(c.tp, c.tp + c.fn)
    rec_M = _ratio(c.tn, c.tn + c.fp)
    return prec_m, prec_M, _mean2(prec_m, prec_M), rec_m, rec_M, _mean2(rec_m, rec_M)


def metrics_report(c: ConfusionCounts) -> MetricsReport:
    return MetricsReport(*f1_scores(c), *precision_recall(c))


def loss_breakdown(per_sample_losses, predictions, labels) -> LossBreakdown:
    """Minority/majority loss (both over the full sample size) and the mean
    loss of correctly and wrongly classified majority rows."""
    losses, pred, lab = _aligned(per_sample_losses, predictions, labels)
    losses = losses.astype(np.float64)
    n = len(losses)
    minority = lab == 1
    majority = ~minority
    true_major = majority & (pred == 0)
    false_major = majority & (pred == 1)
    n_t = int(true_major.sum())
    n_f = int(false_major.sum())
    return LossBreakdown(
        J_m=float(losses[minority].sum() / n),
        J_M=float(losses[majority].sum() / n),
        J_T_M=float(losses[true_major].sum() / n_t) if n_t else None,
        J_F_M=float(losses[false_major].sum() / n_f) if n_f else None,
    )
