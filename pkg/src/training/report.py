"""
Run artifacts: per-seed results, the aggregate table, loss curves and the
plot-ready files derived from them.
"""

import io
import logging
from pathlib import Path
from typing import Sequence

import pandas as pd
from rich.console import Console
from rich.markup import escape
from rich.table import Table

from src.core.errors import NoRunsFoundError, SchemaError
from src.core.io import atomic_write_json, atomic_write_text
from .experiment import AggregateRow, ExperimentReport, RunRecord

logger = logging.getLogger(__name__)

RESULTS_FILE = "results.csv"
AGGREGATE_FILE = "aggregate.csv"
LOSS_CURVES_FILE = "loss_curves.csv"
REPORT_FILE = "report.json"
TABLE_FILE = "table.txt"
ABLATION_BARS_FILE = "ablation_bars.csv"

RESULT_COLUMNS = ["model", "preset", "seed", "split", "accuracy", "f1", "tp", "fp", "fn", "tn", "epochs_ran"]
AGGREGATE_COLUMNS = ["model", "preset", "acc_mean", "acc_std", "f1_mean", "f1_std", "n_seeds"]
CURVE_COLUMNS = ["epoch", "train_loss", "val_loss", "val_f1"]


def method_label(model: str, preset: str) -> str:
    return model if preset == "default" else f"{model}[{preset}]"


def results_frame(runs: Sequence[RunRecord]) -> pd.DataFrame:
    rows = []
    for run in runs:
        for split in ("val", "test"):
            scores = getattr(run, split)
            rows.append(
                {
                    "model": run.model,
                    "preset": run.preset,
                    "seed": run.seed,
                    "split": split,
                    "accuracy": scores.accuracy,
                    "f1": scores.f1,
                    "tp": scores.tp,
                    "fp": scores.fp,
                    "fn": scores.fn,
                    "tn": scores.tn,
                    "epochs_ran": run.epochs_ran,
                }
            )
    return pd.DataFrame(rows, columns=RESULT_COLUMNS)


def aggregate_frame(rows: Sequence[AggregateRow]) -> pd.DataFrame:
    return pd.DataFrame([r.model_dump(include=set(AGGREGATE_COLUMNS)) for r in rows], columns=AGGREGATE_COLUMNS)


def curve_frame(run: RunRecord) -> pd.DataFrame:
    return pd.DataFrame([r.model_dump() for r in run.curve], columns=CURVE_COLUMNS)


def curves_frame(runs: Sequence[RunRecord]) -> pd.DataFrame:
    frames = []
    for run in runs:
        frame = curve_frame(run)
        frame.insert(0, "seed", run.seed)
        frame.insert(0, "preset", run.preset)
        frame.insert(0, "model", run.model)
        frames.append(frame)
    if not frames:
        return pd.DataFrame(columns=["model", "preset", "seed", *CURVE_COLUMNS])
    return pd.concat(frames, ignore_index=True)


def _csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, lineterminator="\n")


def write_experiment(report: ExperimentReport, out_dir: str | Path) -> Path:
    """
    Persists an experiment's results, aggregate, loss curves and report JSON.

    Returns:
        The output directory
    """

    out = Path(out_dir)
    atomic_write_text(out / RESULTS_FILE, _csv(results_frame(report.runs)))
    atomic_write_text(out / AGGREGATE_FILE, _csv(aggregate_frame(report.aggregate)))
    for run in report.runs:
        atomic_write_text(out / "curves" / f"{run.model}_{run.preset}_seed{run.seed}.csv", _csv(curve_frame(run)))
    atomic_write_json(out / REPORT_FILE, report.model_dump(mode="json"))
    logger.info(f"Wrote {len(report.runs)} runs and {len(report.aggregate)} aggregate rows to {out}")
    return out


def load_aggregate(run_dir: str | Path) -> pd.DataFrame:
    """
    Reads a run directory's aggregate table.

    Raises:
        NoRunsFoundError: The directory holds no completed runs
        SchemaError: The aggregate file lacks expected columns
    """

    path = Path(run_dir) / AGGREGATE_FILE
    if not path.is_file():
        raise NoRunsFoundError(f"No runs found in {run_dir}")
    frame = pd.read_csv(path)
    missing = [c for c in AGGREGATE_COLUMNS if c not in frame.columns]
    if missing:
        raise SchemaError(f"{path}: missing columns {missing}")
    if frame.empty:
        raise NoRunsFoundError(f"No runs found in {run_dir}")
    return frame


def load_report(run_dir: str | Path) -> ExperimentReport:
    path = Path(run_dir) / REPORT_FILE
    if not path.is_file():
        raise NoRunsFoundError(f"No runs found in {run_dir}")
    return ExperimentReport.model_validate_json(path.read_text(encoding="utf-8"))


def _pct(mean: float, std: float) -> str:
    return f"{100.0 * mean:.2f}±{100.0 * std:.2f}"


def results_table(aggregate: pd.DataFrame) -> Table:
    """Method rows with Acc(%) and F1(%) as mean±std over seeds."""
    table = Table(title="Curb type prediction")
    table.add_column("Method")
    table.add_column("Acc(%)", justify="right")
    table.add_column("F1(%)", justify="right")
    table.add_column("Seeds", justify="right")
    for row in aggregate.itertuples(index=False):
        table.add_row(
            escape(method_label(row.model, row.preset)),
            _pct(row.acc_mean, row.acc_std),
            _pct(row.f1_mean, row.f1_std),
            str(row.n_seeds),
        )
    return table


def ablation_bars(aggregate: pd.DataFrame) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "method": [method_label(m, p) for m, p in zip(aggregate["model"], aggregate["preset"])],
            "acc_pct": 100.0 * aggregate["acc_mean"],
            "acc_err": 100.0 * aggregate["acc_std"],
            "f1_pct": 100.0 * aggregate["f1_mean"],
            "f1_err": 100.0 * aggregate["f1_std"],
        }
    )


def emit_report(run_dir: str | Path, console: Console | None = None) -> Table:
    """
    Prints the aggregate table and writes table.txt, loss_curves.csv and
    ablation_bars.csv into the run directory.
    """

    run_dir = Path(run_dir)
    aggregate = load_aggregate(run_dir)
    table = results_table(aggregate)

    recorder = Console(record=True, width=100, file=io.StringIO())
    recorder.print(table)
    atomic_write_text(run_dir / TABLE_FILE, recorder.export_text())
    atomic_write_text(run_dir / ABLATION_BARS_FILE, _csv(ablation_bars(aggregate)))

    report_path = run_dir / REPORT_FILE
    if report_path.is_file():
        atomic_write_text(run_dir / LOSS_CURVES_FILE, _csv(curves_frame(load_report(run_dir).runs)))
    else:
        logger.warning(f"{report_path} missing; loss curves not written")

    (console or Console()).print(table)
    return table
