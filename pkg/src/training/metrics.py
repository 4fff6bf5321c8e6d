import logging
from typing import Sequence

import numpy as np
from pydantic import BaseModel, Field

from src.core.errors import ContractError, ShapeError

logger = logging.getLogger(__name__)


class ConfusionMatrix(BaseModel):
    """Counts with Type I (label 1) as the positive class."""

    tp: int = Field(default=0, ge=0)
    fp: int = Field(default=0, ge=0)
    fn: int = Field(default=0, ge=0)
    tn: int = Field(default=0, ge=0)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def accuracy(self) -> float:
        if self.total == 0:
            raise ContractError("Accuracy of an empty split is undefined")
        return (self.tp + self.tn) / self.total

    @property
    def precision(self) -> float:
        predicted = self.tp + self.fp
        return self.tp / predicted if predicted else 0.0

    @property
    def recall(self) -> float:
        actual = self.tp + self.fn
        return self.tp / actual if actual else 0.0

    @property
    def f1(self) -> float:
        # equals 2PR / (P + R), and 0 when P + R = 0
        if self.tp == 0:
            return 0.0
        return 2.0 * self.tp / (2.0 * self.tp + self.fp + self.fn)

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(tp=self.tp + other.tp, fp=self.fp + other.fp, fn=self.fn + other.fn, tn=self.tn + other.tn)


class ClassificationMetrics(BaseModel):
    accuracy: float
    f1: float
    precision: float
    recall: float
    confusion: ConfusionMatrix


def _binary(values: Sequence[int] | np.ndarray, what: str) -> np.ndarray:
    arr = np.asarray(values).reshape(-1)
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise ContractError(f"{what} must be 0 or 1")
    return arr.astype(np.int64)


def confusion_counts(labels: Sequence[int] | np.ndarray, predictions: Sequence[int] | np.ndarray) -> ConfusionMatrix:
    y = _binary(labels, "labels")
    p = _binary(predictions, "predictions")
    if y.shape != p.shape:
        raise ShapeError(f"{y.size} labels but {p.size} predictions")
    return ConfusionMatrix(
        tp=int(np.sum((y == 1) & (p == 1))),
        fp=int(np.sum((y == 0) & (p == 1))),
        fn=int(np.sum((y == 1) & (p == 0))),
        tn=int(np.sum((y == 0) & (p == 0))),
    )


def classification_metrics(labels: Sequence[int] | np.ndarray, predictions: Sequence[int] | np.ndarray) -> ClassificationMetrics:
    """
    Accuracy and F1 of binary predictions.

    Raises:
        ContractError: Empty input or non-binary values
    """
    confusion = confusion_counts(labels, predictions)
    return metrics_from_confusion(confusion)


def metrics_from_confusion(confusion: ConfusionMatrix) -> ClassificationMetrics:
    return ClassificationMetrics(
        accuracy=confusion.accuracy,
        f1=confusion.f1,
        precision=confusion.precision,
        recall=confusion.recall,
        confusion=confusion,
    )


def majority_accuracy(labels: Sequence[int] | np.ndarray) -> float:
    """Accuracy of always predicting the split's more frequent class."""
    y = _binary(labels, "labels")
    if y.size == 0:
        raise ContractError("Majority accuracy of an empty split is undefined")
    rate = float(y.mean())
    return max(rate, 1.0 - rate)


def mean_std(values: Sequence[float]) -> tuple[float, float]:
    """
    Mean and sample standard deviation (n - 1 denominator).

    A single value yields std 0 with a warning.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ContractError("mean_std of no values")
    if arr.size == 1:
        logger.warning("Standard deviation of a single run is undefined; reporting 0")
        return float(arr[0]), 0.0
    return float(arr.mean()), float(arr.std(ddof=1))
