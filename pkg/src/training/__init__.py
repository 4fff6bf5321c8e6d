from .loss import bce_loss, day_loss
from .optimizer import AdamState, adam_step, clip_global_norm, global_norm
from .metrics import (
    ConfusionMatrix,
    ClassificationMetrics,
    confusion_counts,
    classification_metrics,
    majority_accuracy,
    mean_std,
)
from .trainer import TrainConfig, TrainResult, EpochRecord, EvalResult, train, evaluate, evaluate_checkpoint, mean_loss
from .experiment import (
    RunSpec,
    RunRecord,
    PreparedData,
    prepare_data,
    AggregateRow,
    ExperimentReport,
    record_run,
    run_single,
    aggregate_runs,
    multi_seed_experiment,
)
from .report import write_experiment, load_aggregate, load_report, emit_report

__all__ = [
    "bce_loss",
    "day_loss",
    "AdamState",
    "adam_step",
    "clip_global_norm",
    "global_norm",
    "ConfusionMatrix",
    "ClassificationMetrics",
    "confusion_counts",
    "classification_metrics",
    "majority_accuracy",
    "mean_std",
    "TrainConfig",
    "TrainResult",
    "EpochRecord",
    "EvalResult",
    "train",
    "evaluate",
    "evaluate_checkpoint",
    "mean_loss",
    "RunSpec",
    "RunRecord",
    "PreparedData",
    "prepare_data",
    "AggregateRow",
    "ExperimentReport",
    "record_run",
    "run_single",
    "aggregate_runs",
    "multi_seed_experiment",
    "write_experiment",
    "load_aggregate",
    "load_report",
    "emit_report",
]
