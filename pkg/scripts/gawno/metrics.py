"""
Detection metrics: confusion counts, precision/recall/F1 and ROC AUC.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.stats import rankdata

from .errors import DimensionError, UndefinedMetricError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError(f"Confusion counts must be non-negative: {self}")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


class MetricScores(NamedTuple):
    precision: float
    recall: float
    f1: float


def _binary(values: np.ndarray, what: str) -> np.ndarray:
    array = np.asarray(values)
    if array.ndim != 1:
        raise DimensionError(f"{what} must be one-dimensional, got shape {array.shape}")
    return array.astype(bool)


def confusion_counts(predicted: np.ndarray, labels: np.ndarray) -> ConfusionCounts:
    """Count agreement between boolean predictions and 0/1 labels."""
    pred = _binary(predicted, "predictions")
    truth = _binary(labels, "labels")
    if pred.shape != truth.shape:
        raise DimensionError(f"predictions {pred.shape} and labels {truth.shape} differ")
    return ConfusionCounts(
        tp=int(np.sum(pred & truth)),
        fp=int(np.sum(pred & ~truth)),
        fn=int(np.sum(~pred & truth)),
        tn=int(np.sum(~pred & ~truth)),
    )


def _ratio(numerator: int, denominator: int, name: str) -> float:
    if denominator == 0:
        logger.warning(f"{name} is undefined (zero denominator); reporting 0")
        return 0.0
    return numerator / denominator


def metrics(counts: ConfusionCounts) -> MetricScores:
    """
    Precision, recall and their harmonic mean.

    A zero denominator yields 0 for that metric and logs a warning.
    """
    precision = _ratio(counts.tp, counts.tp + counts.fp, "precision")
    recall = _ratio(counts.tp, counts.tp + counts.fn, "recall")
    if precision + recall == 0:
        logger.warning("f1 is undefined (precision + recall = 0); reporting 0")
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return MetricScores(precision=precision, recall=recall, f1=f1)


def auc_roc(scores: np.ndarray, labels: np.ndarray) -> float:
    """
    Area under the ROC curve in its Mann-Whitney form.

    The fraction of (positive, negative) pairs where the positive scores
    higher, with ties counted as one half.

    Raises:
        UndefinedMetricError: If only one class is present.
    """
    scores = np.asarray(scores, dtype=np.float64)
    truth = _binary(labels, "labels")
    if scores.shape != truth.shape:
        raise DimensionError(f"scores {scores.shape} and labels {truth.shape} differ")
    positives = int(truth.sum())
    negatives = truth.size - positives
    if positives == 0 or negatives == 0:
        raise UndefinedMetricError("AUC needs both normal and faulty samples")
    ranks = rankdata(scores)
    u = ranks[truth].sum() - positives * (positives + 1) / 2.0
    return float(u / (positives * negatives))
