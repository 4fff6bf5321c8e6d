"""
Day-batched training loop and evaluation shared by the hierarchical model
and every baseline.
"""

import logging
import math
import time

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.core.errors import ContractError, DivergenceError, EmptySplitError
from src.industry import IndustryGraph
from src.market.windows import Dataset, DaySample
from src.model import Checkpoint, DayModel, HgnnParams, model_from_description
from .loss import day_loss
from .metrics import ClassificationMetrics, ConfusionMatrix, confusion_counts, majority_accuracy, metrics_from_confusion
from .optimizer import AdamState, adam_step

logger = logging.getLogger(__name__)


class TrainConfig(BaseModel):
    """Optimizer and schedule settings, identical for every model kind."""

    model_config = ConfigDict(extra="forbid")

    learning_rate: float = Field(default=1e-3, gt=0.0, description="Adam step size")
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0, description="Adam first-moment decay")
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0, description="Adam second-moment decay")
    eps: float = Field(default=1e-8, gt=0.0, description="Adam denominator floor")
    epochs: int = Field(default=20, ge=1, description="Maximum passes over the training days")
    patience: int = Field(default=5, ge=1, description="Epochs without a validation F1 improvement before stopping")
    clip_norm: float | None = Field(default=5.0, gt=0.0, description="Global gradient-norm threshold, null disables clipping")
    seeds: list[int] = Field(default_factory=lambda: [1, 2, 3, 4, 5], description="Training seeds")

    @field_validator("seeds")
    @classmethod
    def _seeds_nonempty(cls, seeds: list[int]) -> list[int]:
        if not seeds:
            raise ValueError("seeds must not be empty")
        return seeds


class EpochRecord(BaseModel):
    epoch: int
    train_loss: float
    val_loss: float
    val_f1: float


class EvalResult(BaseModel):
    """
    Metrics of one model on one split.

    Attributes:
        metrics: Accuracy, F1 and confusion matrix
        loss: Mean per-event cross-entropy
        majority_accuracy: Accuracy of a constant majority-class predictor on the same split
        n_events: Number of classified curb events
        attention: (day, node index, weight) triples when requested and the model has a market view
    """

    metrics: ClassificationMetrics
    loss: float
    majority_accuracy: float
    n_events: int
    attention: list[tuple[int, int, float]] | None = None

    @property
    def confusion(self) -> ConfusionMatrix:
        return self.metrics.confusion


class TrainResult(BaseModel):
    """Best-validation parameters plus the per-epoch history of one run."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    kind: str
    preset: str
    seed: int
    params: HgnnParams
    curve: list[EpochRecord]
    epochs_ran: int
    best_epoch: int
    best_val_f1: float
    initial_train_loss: float
    n_params: int
    wall_clock: float

    def checkpoint(self, model: DayModel, fingerprint: str = "") -> Checkpoint:
        return Checkpoint.from_params(
            self.params,
            kind=self.kind,
            preset=self.preset,
            model=model.describe(),
            fingerprint=fingerprint,
            seed=self.seed,
            best_val_f1=self.best_val_f1,
            epoch=self.best_epoch,
        )


def _require_days(dataset: Dataset, name: str) -> None:
    if not dataset.days or dataset.n_events == 0:
        raise EmptySplitError(f"The {name} split has no curb events")


def _chronological(dataset: Dataset) -> list[DaySample]:
    return sorted(dataset.days, key=lambda d: d.day)


def mean_loss(model: DayModel, params: HgnnParams, dataset: Dataset) -> float:
    """Event-weighted mean cross-entropy over a split, parameters held constant."""
    _require_days(dataset, "evaluated")
    total = 0.0
    for day in _chronological(dataset):
        out = model.predict(day, params)
        total += day_loss(out.logits, day.labels).item() * day.n_curb
    return total / dataset.n_events


def evaluate(
    model: DayModel,
    params: HgnnParams,
    dataset: Dataset,
    with_attention: bool = False,
) -> EvalResult:
    """
    Scores every curb event of a split; a logit >= 0 predicts Type I.

    Raises:
        EmptySplitError: The split has no curb events
    """

    _require_days(dataset, "evaluated")
    confusion = ConfusionMatrix()
    total_loss = 0.0
    attention: list[tuple[int, int, float]] | None = [] if with_attention else None
    for day in _chronological(dataset):
        out = model.predict(day, params)
        logits = out.logits.value.reshape(-1)
        predictions = (logits >= 0.0).astype(np.int64)
        confusion = confusion + confusion_counts(day.labels, predictions)
        total_loss += day_loss(out.logits, day.labels).item() * day.n_curb
        if attention is not None and out.attention is not None:
            attention.extend((day.day, node, float(w)) for node, w in enumerate(out.attention))

    return EvalResult(
        metrics=metrics_from_confusion(confusion),
        loss=total_loss / dataset.n_events,
        majority_accuracy=majority_accuracy(dataset.labels()),
        n_events=dataset.n_events,
        attention=attention,
    )


def evaluate_checkpoint(
    checkpoint: Checkpoint,
    dataset: Dataset,
    graph: IndustryGraph | None = None,
    with_attention: bool = False,
) -> EvalResult:
    """Rebuilds the checkpoint's model and evaluates its stored parameters."""
    model = model_from_description(checkpoint.model, graph)
    params = checkpoint.params()
    params.check_shapes(model.parameter_shapes())
    return evaluate(model, params, dataset, with_attention=with_attention)


def train(
    model: DayModel,
    train_set: Dataset,
    val_set: Dataset,
    config: TrainConfig,
    seed: int,
) -> TrainResult:
    """
    Trains one model with one seed, one Adam step per training day.

    Days are visited in chronological order every epoch. The returned
    parameters are those of the epoch with the highest validation F1; ties
    keep the earlier epoch.

    Args:
        model: The model to fit
        train_set: Training days
        val_set: Validation days, used for early stopping
        config: Optimizer and schedule
        seed: Parameter initialization seed

    Returns:
        The run's best parameters and history

    Raises:
        EmptySplitError: Train or validation split has no curb events
        DivergenceError: A loss or parameter becomes non-finite
    """

    _require_days(train_set, "training")
    _require_days(val_set, "validation")
    started = time.perf_counter()

    params = model.init_params(seed)
    state = AdamState()
    initial_loss = mean_loss(model, params, train_set)
    logger.info(f"{model.kind}/{model.preset} seed {seed}: {params.n_params} parameters, initial train loss {initial_loss:.4f}")

    curve: list[EpochRecord] = []
    best_params = params.copy()
    best_f1 = -math.inf
    best_epoch = 0
    stale = 0
    epoch = 0
    for epoch in range(1, config.epochs + 1):
        step_losses = []
        for day in _chronological(train_set):
            tape, out = model.tape_forward(day, params)
            loss = day_loss(out.logits, day.labels)
            value = loss.item()
            if not math.isfinite(value):
                raise DivergenceError(
                    f"{model.kind}/{model.preset} seed {seed}: loss is {value} at epoch {epoch}, day {day.day}"
                )
            grads = tape.backward(loss)
            values, state = adam_step(
                params.values,
                grads,
                state,
                learning_rate=config.learning_rate,
                beta1=config.beta1,
                beta2=config.beta2,
                eps=config.eps,
                clip_norm=config.clip_norm,
            )
            params = HgnnParams(values=values)
            step_losses.append(value)

        if not params.is_finite():
            raise DivergenceError(f"{model.kind}/{model.preset} seed {seed}: non-finite parameters after epoch {epoch}")

        val = evaluate(model, params, val_set)
        record = EpochRecord(
            epoch=epoch,
            train_loss=float(np.mean(step_losses)),
            val_loss=val.loss,
            val_f1=val.metrics.f1,
        )
        curve.append(record)
        logger.info(
            f"{model.kind}/{model.preset} seed {seed} epoch {epoch}: "
            f"train loss {record.train_loss:.4f}, val loss {record.val_loss:.4f}, val F1 {record.val_f1:.4f}"
        )

        if record.val_f1 > best_f1:
            best_f1 = record.val_f1
            best_params = params.copy()
            best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                logger.info(f"{model.kind}/{model.preset} seed {seed}: early stop after epoch {epoch} (best epoch {best_epoch})")
                break

    return TrainResult(
        kind=model.kind,
        preset=model.preset,
        seed=seed,
        params=best_params,
        curve=curve,
        epochs_ran=epoch,
        best_epoch=best_epoch,
        best_val_f1=best_f1,
        initial_train_loss=initial_loss,
        n_params=params.n_params,
        wall_clock=time.perf_counter() - started,
    )


def check_disjoint(*splits: Dataset) -> None:
    """Raises ContractError when two splits share a day."""
    seen: set[int] = set()
    for split in splits:
        days = set(split.day_indices)
        if seen & days:
            raise ContractError(f"Splits overlap on days {sorted(seen & days)[:5]}")
        seen |= days
