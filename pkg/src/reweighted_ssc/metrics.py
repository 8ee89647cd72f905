"""Discovery bookkeeping and evaluation metrics.

A discovery is an index pair ``(i, j)`` with ``|c*_ij|`` above a threshold;
it is true when ``y_i`` and ``y_j`` share a ground-truth cluster. The
threshold used is carried in every tally so reports are auditable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidInputError
from .pipeline import CoefficientMatrix

__all__ = [
    "DiscoveryTally",
    "EventSpec",
    "MetricsReport",
    "discovery_mask",
    "discovery_tally",
    "dcr",
    "tdr",
    "ccr",
    "event_indicators",
    "metrics_report",
]


@dataclass
class DiscoveryTally:
    true_count: np.ndarray
    false_count: np.ndarray
    threshold: float | None

    @property
    def total(self) -> int:
        return int(self.true_count.sum() + self.false_count.sum())


@dataclass(frozen=True)
class EventSpec:
    k_t: int = 1
    k_f: int = 0

    def __post_init__(self):
        if self.k_t < 1 or self.k_f < 0:
            raise InvalidInputError(f"need k_t >= 1 and k_f >= 0, got k_t={self.k_t}, k_f={self.k_f}")


@dataclass
class MetricsReport:
    dcr: float
    tdr: float | None
    ccr: float | None
    discoveries: int
    true_discoveries: int | None
    pairs: int
    threshold: float | None


def discovery_mask(coeffs, threshold: float | None = None) -> np.ndarray:
    """``(N, N)`` boolean matrix of discoveries in full indexing.

    With ``threshold=None`` each row uses the support its solver reported;
    otherwise ``|c*_ij| > threshold``. Plain ``(N, N-1)`` arrays are
    accepted and need an explicit threshold.
    """
    if isinstance(coeffs, CoefficientMatrix):
        if threshold is None:
            return coeffs.support_mask()
        rows = coeffs.rows
    else:
        rows = np.asarray(coeffs, dtype=float)
        if threshold is None:
            threshold = 0.0
    N = rows.shape[0]
    if rows.shape != (N, N - 1):
        raise InvalidInputError(f"coefficient rows must be (N, N-1), got {rows.shape}")
    mask = np.zeros((N, N), dtype=bool)
    off = ~np.eye(N, dtype=bool)
    mask[off] = (np.abs(rows) > threshold).ravel()
    return mask


def discovery_tally(coeffs, labels, threshold: float | None = None) -> DiscoveryTally:
    if labels is None:
        raise InvalidInputError("discovery tallies need ground-truth labels")
    labels = np.asarray(labels)
    mask = discovery_mask(coeffs, threshold)
    if labels.shape != (mask.shape[0],):
        raise InvalidInputError("labels do not match the coefficient matrix")
    same = labels[:, None] == labels[None, :]
    return DiscoveryTally(
        true_count=(mask & same).sum(axis=1),
        false_count=(mask & ~same).sum(axis=1),
        threshold=threshold,
    )


def dcr(coeffs, threshold: float | None = None) -> float:
    """Total discoveries over ``N(N-1)``."""
    mask = discovery_mask(coeffs, threshold)
    N = mask.shape[0]
    return float(mask.sum()) / (N * (N - 1))


def tdr(tally: DiscoveryTally) -> float | None:
    """True discoveries over all discoveries; ``None`` when there are none."""
    total = tally.total
    if total == 0:
        return None
    return float(tally.true_count.sum()) / total


def ccr(predicted, truth) -> float:
    """Fraction of points correctly clustered under the best label matching.

    The matching maximizes agreements over the confusion matrix (Hungarian
    algorithm), so it handles different numbers of predicted and true
    clusters.
    """
    pred = np.asarray(getattr(predicted, "labels", predicted))
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise InvalidInputError("predicted and true labelings must have the same length")
    _, p = np.unique(pred, return_inverse=True)
    _, t = np.unique(truth, return_inverse=True)
    confusion = np.zeros((p.max() + 1, t.max() + 1), dtype=np.int64)
    np.add.at(confusion, (p, t), 1)
    rows, cols = linear_sum_assignment(confusion, maximize=True)
    return float(confusion[rows, cols].sum()) / truth.size


def event_indicators(tally: DiscoveryTally, spec: EventSpec):
    """Per-sample booleans for the three recovery events.

    Event 1: fewer than ``k_t`` true and at most ``k_f`` false discoveries.
    Event 2: at most ``k_f`` false discoveries.
    Event 3: at least ``k_t`` true and at most ``k_f`` false discoveries.
    """
    few_false = tally.false_count <= spec.k_f
    e1 = (tally.true_count < spec.k_t) & few_false
    e3 = (tally.true_count >= spec.k_t) & few_false
    return e1, few_false, e3


def metrics_report(coeffs: CoefficientMatrix, labels=None, predicted=None,
                   threshold: float | None = None) -> MetricsReport:
    mask = discovery_mask(coeffs, threshold)
    N = mask.shape[0]
    total = int(mask.sum())
    report = MetricsReport(
        dcr=total / (N * (N - 1)),
        tdr=None,
        ccr=None,
        discoveries=total,
        true_discoveries=None,
        pairs=N * (N - 1),
        threshold=threshold,
    )
    if labels is not None:
        tally = discovery_tally(coeffs, labels, threshold)
        report.tdr = tdr(tally)
        report.true_discoveries = int(tally.true_count.sum())
        if predicted is not None:
            report.ccr = ccr(predicted, labels)
    return report
