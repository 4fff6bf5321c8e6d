"""Multi-seed, multi-model experiment runner."""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

from pydantic import BaseModel, ConfigDict, Field

from src.industry import IndustryGraph, build_graph
from src.market.corpus import Corpus, DataConfig, prepare_dataset
from src.market.windows import Dataset, temporal_split
from src.model import BaselineConfig, DayModel, HgnnConfig, build_model
from .metrics import mean_std
from .trainer import EpochRecord, EvalResult, TrainConfig, TrainResult, evaluate, train

logger = logging.getLogger(__name__)


class RunSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    model: str
    preset: str = "default"
    seed: int


class PreparedData(BaseModel):
    """Normalized splits and the graph shared read-only by every run."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    train: Dataset
    val: Dataset
    test: Dataset
    graph: IndustryGraph


def prepare_data(corpus: Corpus, config: DataConfig | None = None) -> PreparedData:
    """Builds the normalized dataset, its contiguous splits and the industry graph."""
    config = config or DataConfig()
    dataset = prepare_dataset(corpus, config)
    train, val, test = temporal_split(dataset, config.train_frac, config.val_frac)
    graph = build_graph({s: corpus.industries[s] for s in dataset.stock_ids}, dataset.stock_ids)
    logger.info(
        f"Prepared {len(train.days)}/{len(val.days)}/{len(test.days)} train/val/test days "
        f"({train.n_events}/{val.n_events}/{test.n_events} curb events), {graph.edge_count} industry edges"
    )
    return PreparedData(train=train, val=val, test=test, graph=graph)


class SplitScores(BaseModel):
    accuracy: float
    f1: float
    tp: int
    fp: int
    fn: int
    tn: int
    loss: float
    majority_accuracy: float

    @classmethod
    def from_eval(cls, result: EvalResult) -> "SplitScores":
        c = result.confusion
        return cls(
            accuracy=result.metrics.accuracy,
            f1=result.metrics.f1,
            tp=c.tp,
            fp=c.fp,
            fn=c.fn,
            tn=c.tn,
            loss=result.loss,
            majority_accuracy=result.majority_accuracy,
        )


class RunRecord(BaseModel):
    """One completed (model, preset, seed) run."""

    model: str
    preset: str
    seed: int
    epochs_ran: int
    best_epoch: int
    best_val_f1: float
    n_params: int
    wall_clock: float
    val: SplitScores
    test: SplitScores
    curve: list[EpochRecord]
    checkpoint_path: str | None = None


class AggregateRow(BaseModel):
    model: str
    preset: str
    acc_mean: float
    acc_std: float
    f1_mean: float
    f1_std: float
    n_seeds: int
    n_params: int


class ExperimentReport(BaseModel):
    """Per-seed runs plus their per-(model, preset) aggregate on the test split."""

    fingerprint: str = ""
    runs: list[RunRecord] = Field(default_factory=list)
    aggregate: list[AggregateRow] = Field(default_factory=list)
    wall_clock: float = 0.0


RunFn = Callable[[RunSpec], RunRecord]


def record_run(spec: RunSpec, model: DayModel, result: TrainResult, data: PreparedData) -> RunRecord:
    """Scores a trained run's best parameters on validation and test."""
    return RunRecord(
        model=spec.model,
        preset=model.preset,
        seed=result.seed,
        epochs_ran=result.epochs_ran,
        best_epoch=result.best_epoch,
        best_val_f1=result.best_val_f1,
        n_params=result.n_params,
        wall_clock=result.wall_clock,
        val=SplitScores.from_eval(evaluate(model, result.params, data.val)),
        test=SplitScores.from_eval(evaluate(model, result.params, data.test)),
        curve=result.curve,
    )


def run_single(
    spec: RunSpec,
    data: PreparedData,
    hgnn: HgnnConfig,
    baseline: BaselineConfig,
    train_config: TrainConfig,
) -> RunRecord:
    """Trains one run in-process, with the same steps as the pipeline's train and evaluate nodes."""
    model = build_model(spec.model, spec.preset, hgnn=hgnn, baseline=baseline, graph=data.graph)
    result = train(model, data.train, data.val, train_config, spec.seed)
    return record_run(spec, model, result, data)


def aggregate_runs(runs: Sequence[RunRecord], split: str = "test") -> list[AggregateRow]:
    """Mean and sample std of accuracy and F1 per (model, preset), in first-seen order."""
    groups: dict[tuple[str, str], list[RunRecord]] = {}
    for run in runs:
        groups.setdefault((run.model, run.preset), []).append(run)

    rows = []
    for (model, preset), members in groups.items():
        scores = [getattr(r, split) for r in members]
        acc_mean, acc_std = mean_std([s.accuracy for s in scores])
        f1_mean, f1_std = mean_std([s.f1 for s in scores])
        rows.append(
            AggregateRow(
                model=model,
                preset=preset,
                acc_mean=acc_mean,
                acc_std=acc_std,
                f1_mean=f1_mean,
                f1_std=f1_std,
                n_seeds=len(members),
                n_params=members[0].n_params,
            )
        )
    return rows


def expand_grid(grid: Sequence[tuple[str, str]], seeds: Sequence[int]) -> list[RunSpec]:
    return [RunSpec(model=model, preset=preset, seed=seed) for model, preset in grid for seed in seeds]


def multi_seed_experiment(
    grid: Sequence[tuple[str, str]],
    seeds: Sequence[int],
    run: RunFn,
    workers: int = 1,
    fingerprint: str = "",
) -> ExperimentReport:
    """
    Runs every (model, preset) of `grid` with every seed.

    Runs share nothing mutable, so with `workers > 1` they fan out over a
    thread pool. Records come back in grid order regardless of completion
    order.

    Args:
        grid: (model kind, preset) pairs
        seeds: Training seeds
        run: Executes one run, typically `run_single` bound to prepared data
        workers: Thread count
        fingerprint: Experiment configuration fingerprint

    Returns:
        The per-seed runs and their aggregate
    """

    started = time.perf_counter()
    specs = expand_grid(grid, seeds)
    if len(seeds) < 2:
        logger.warning("Fewer than two seeds: standard deviations will be reported as 0")
    logger.info(f"Running {len(specs)} runs ({len(grid)} models x {len(seeds)} seeds) on {workers} worker(s)")

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run, specs))
    else:
        records = [run(spec) for spec in specs]

    return ExperimentReport(
        fingerprint=fingerprint,
        runs=records,
        aggregate=aggregate_runs(records),
        wall_clock=time.perf_counter() - started,
    )
