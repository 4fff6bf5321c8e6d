"""The `hgnn` command group."""

import functools
import logging
from pathlib import Path

import click
import pandas as pd
from pydantic import ValidationError
from rich.console import Console
from rich.markup import escape
from rich.table import Table

from src.core import AppSession, HgnnError, configure_logger
from src.core.io import atomic_write_json, atomic_write_text
from src.market.corpus import load_corpus, write_corpus
from src.market.synthetic import generate_synthetic
from src.model import MODEL_KINDS, PRESETS, load_checkpoint
from src.pipeline import RunPipeline
from src.training import (
    EvalResult,
    ExperimentReport,
    PreparedData,
    emit_report,
    evaluate_checkpoint,
    multi_seed_experiment,
    prepare_data,
    write_experiment,
)
from .config import ExperimentConfig

logger = logging.getLogger(__name__)

SPLITS = ("train", "val", "test")


def _cli_errors(command):
    """Turns domain and validation errors into a clean exit status 1."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except (HgnnError, ValidationError, ValueError, OSError) as e:
            logger.debug("command failed", exc_info=True)
            raise click.ClickException(str(e))

    return wrapper


def _load_config(path: str | None) -> ExperimentConfig:
    return ExperimentConfig.from_file(path) if path else ExperimentConfig()


def _prepare(config: ExperimentConfig, data_dir: str) -> PreparedData:
    # corpus schema problems surface here, before any training
    return prepare_data(load_corpus(data_dir), config.data)


def _pipeline(config: ExperimentConfig, session: AppSession) -> RunPipeline:
    return RunPipeline(
        data_config=config.data,
        hgnn=config.hgnn,
        baseline=config.baseline,
        train_config=config.train,
        fingerprint=config.fingerprint(),
        app_session=session,
    )


def _write_best(report: ExperimentReport, out: Path) -> Path | None:
    candidates = [r for r in report.runs if r.checkpoint_path]
    if not candidates:
        return None
    best = max(candidates, key=lambda r: r.best_val_f1)
    return atomic_write_text(out / "best.json", Path(best.checkpoint_path).read_text(encoding="utf-8"))


def _metrics_table(title: str, result: EvalResult) -> Table:
    table = Table(title=title)
    table.add_column("Metric")
    table.add_column("Value", justify="right")
    c = result.confusion
    table.add_row("accuracy", f"{result.metrics.accuracy:.4f}")
    table.add_row("f1", f"{result.metrics.f1:.4f}")
    table.add_row("precision", f"{result.metrics.precision:.4f}")
    table.add_row("recall", f"{result.metrics.recall:.4f}")
    table.add_row("majority accuracy", f"{result.majority_accuracy:.4f}")
    table.add_row("loss", f"{result.loss:.4f}")
    table.add_row("tp / fp / fn / tn", f"{c.tp} / {c.fp} / {c.fn} / {c.tn}")
    return table


@click.group()
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    default=None,
    help="Log level; defaults to HGNN_LOG_LEVEL or INFO.",
)
@click.pass_context
def main(ctx: click.Context, log_level: str | None):
    """Hierarchical graph model for limit-price (curb) stock type prediction."""
    session = AppSession()
    configure_logger(log_level or session.log_level)
    ctx.obj = session


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="Experiment config JSON.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None, help="Output directory; defaults to paths.data_dir.")
@click.option("--seed", type=int, default=None, help="Generator seed (overrides HGNN_SEED and the config).")
@click.pass_obj
@_cli_errors
def generate(session: AppSession, config_path: str | None, out_dir: str | None, seed: int | None):
    """Generate a synthetic market: daily, minute and industry CSVs plus manifest.json."""
    config = _load_config(config_path)
    synthetic = config.synthetic.model_copy(update={"seed": session.resolve_seed(seed, config.synthetic.seed)})
    out = Path(out_dir or config.paths.data_dir)

    market = generate_synthetic(synthetic)
    manifest = write_corpus(market, out, synthetic)
    click.echo(
        f"Wrote {manifest['rows']['daily']} daily rows, {manifest['curb_events']} curb events "
        f"(Type I share {manifest['label_balance']:.3f}) to {out}"
    )


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="Experiment config JSON.")
@click.option("--data", "data_dir", type=click.Path(file_okay=False), default=None, help="Corpus directory; defaults to paths.data_dir.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None, help="Run directory; defaults to paths.out_dir.")
@click.option("--model", "kind", type=click.Choice(MODEL_KINDS), default="hgnn", show_default=True, help="Model kind.")
@click.option("--preset", default="full", show_default=True, help=f"HGNN ablation preset, one of {sorted(PRESETS)}.")
@click.option("--seed", type=int, default=None, help="Train a single seed (overrides HGNN_SEED and train.seeds).")
@click.pass_obj
@_cli_errors
def train(
    session: AppSession,
    config_path: str | None,
    data_dir: str | None,
    out_dir: str | None,
    kind: str,
    preset: str,
    seed: int | None,
):
    """Train one model over the configured seeds and save checkpoints and results."""
    config = _load_config(config_path)
    override = seed if seed is not None else session.seed_override
    seeds = [override] if override is not None else list(config.train.seeds)
    preset = preset if kind == "hgnn" else "default"
    out = Path(out_dir or config.paths.out_dir)

    data = _prepare(config, data_dir or config.paths.data_dir)
    pipeline = _pipeline(config, session)
    report = multi_seed_experiment(
        [(kind, preset)],
        seeds,
        run=lambda spec: pipeline.run(spec, data=data, out_dir=out),
        fingerprint=config.fingerprint(),
    )
    config.to_file(out / "config.json")
    write_experiment(report, out)
    best = _write_best(report, out)
    row = report.aggregate[0]
    click.echo(
        f"{row.model}/{row.preset}: test accuracy {row.acc_mean:.4f}±{row.acc_std:.4f}, "
        f"F1 {row.f1_mean:.4f}±{row.f1_std:.4f} over {row.n_seeds} seed(s); best checkpoint {best}"
    )


@main.command()
@click.option("--checkpoint", "checkpoint_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Checkpoint JSON.")
@click.option("--data", "data_dir", type=click.Path(file_okay=False), default=None, help="Corpus directory; defaults to paths.data_dir.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="Experiment config JSON used for training.")
@click.option("--split", type=click.Choice(SPLITS), default="test", show_default=True, help="Split to score.")
@click.option("--dump-attention", type=click.Path(dir_okay=False), default=None, help="Write market-attention weights as CSV day,stock_id,weight.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None, help="Write metrics as JSON.")
@_cli_errors
def evaluate(
    checkpoint_path: str,
    data_dir: str | None,
    config_path: str | None,
    split: str,
    dump_attention: str | None,
    out_path: str | None,
):
    """Score a saved checkpoint on one split."""
    config = _load_config(config_path)
    checkpoint = load_checkpoint(checkpoint_path)
    if config_path and checkpoint.fingerprint and checkpoint.fingerprint != config.fingerprint():
        logger.warning(f"Checkpoint fingerprint {checkpoint.fingerprint} differs from config {config.fingerprint()}")

    data = _prepare(config, data_dir or config.paths.data_dir)
    dataset = getattr(data, split)
    result = evaluate_checkpoint(checkpoint, dataset, data.graph, with_attention=dump_attention is not None)
    Console().print(_metrics_table(f"{checkpoint.kind}/{checkpoint.preset} seed {checkpoint.seed} on {split}", result))

    if out_path:
        atomic_write_json(out_path, result.model_dump(mode="json", exclude={"attention"}))
    if dump_attention:
        rows = result.attention or []
        if not rows:
            logger.warning(f"{checkpoint.kind}/{checkpoint.preset} has no market view; attention file is empty")
        frame = pd.DataFrame(
            [(day, data.graph.stock_ids[node], weight) for day, node, weight in rows],
            columns=["day", "stock_id", "weight"],
        )
        atomic_write_text(dump_attention, frame.to_csv(index=False, lineterminator="\n"))


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="Experiment config JSON.")
@click.option("--data", "data_dir", type=click.Path(file_okay=False), default=None, help="Corpus directory; defaults to paths.data_dir.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None, help="Run directory; defaults to paths.out_dir.")
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True, help="Runs trained in parallel.")
@click.pass_obj
@_cli_errors
def ablate(session: AppSession, config_path: str | None, data_dir: str | None, out_dir: str | None, workers: int):
    """Run the configured model/preset grid over every seed and write the aggregate table."""
    config = _load_config(config_path)
    out = Path(out_dir or config.paths.out_dir)

    data = _prepare(config, data_dir or config.paths.data_dir)
    pipeline = _pipeline(config, session)
    report = multi_seed_experiment(
        config.grid,
        config.train.seeds,
        run=lambda spec: pipeline.run(spec, data=data, out_dir=out),
        workers=workers,
        fingerprint=config.fingerprint(),
    )
    config.to_file(out / "config.json")
    write_experiment(report, out)
    _write_best(report, out)
    emit_report(out)


@main.command()
@click.option("--seed", type=int, default=None, help="First seed (overrides HGNN_SEED); defaults to 0.")
@click.option("--trials", type=click.IntRange(min=1), default=20, show_default=True, help="Random instances per check.")
@click.option("--step", type=float, default=1e-5, show_default=True, help="Central-difference step.")
@click.option("--tolerance", type=float, default=1e-4, show_default=True, help="Relative error threshold.")
@click.option("--inject-bug", is_flag=True, help="Add a deliberately corrupted operation, which must be reported.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None, help="Write the report as JSON.")
@click.pass_obj
@_cli_errors
def gradcheck(
    session: AppSession,
    seed: int | None,
    trials: int,
    step: float,
    tolerance: float,
    inject_bug: bool,
    out_path: str | None,
):
    """Finite-difference checks of every operation and of the end-to-end models."""
    from src.diffcore.suite import run_diffcore_suite
    from src.model.suite import run_model_suite

    first = session.resolve_seed(seed, 0)
    seeds = list(range(first, first + trials))
    reports = run_diffcore_suite(seeds, step=step, tolerance=tolerance, inject_bug=inject_bug)
    reports += run_model_suite(seeds, step=step, tolerance=tolerance)

    ops: dict[str, dict] = {}
    for report in reports:
        op = report.label.split("[", 1)[0]
        entry = ops.setdefault(op, {"max_rel_error": 0.0, "passed": True, "checks": 0})
        entry["max_rel_error"] = max(entry["max_rel_error"], report.max_rel_error)
        entry["passed"] = entry["passed"] and report.passed
        entry["checks"] += 1
    failing = sorted(op for op, entry in ops.items() if not entry["passed"])
    summary = {
        "passed": not failing,
        "seeds": seeds,
        "step": step,
        "tolerance": tolerance,
        "ops": ops,
        "failing": failing,
    }
    if out_path:
        atomic_write_json(out_path, summary)

    table = Table(title="Gradient checks")
    table.add_column("Operation")
    table.add_column("Max rel error", justify="right")
    table.add_column("Result")
    for op, entry in ops.items():
        table.add_row(escape(op), f"{entry['max_rel_error']:.2e}", "pass" if entry["passed"] else "FAIL")
    Console().print(table)

    if failing:
        raise click.ClickException(f"Gradient check failed for: {', '.join(failing)}")
    click.echo(f"All {len(reports)} gradient checks passed")


@main.command()
@click.argument("run_dir", type=click.Path(file_okay=False))
@_cli_errors
def report(run_dir: str):
    """Print the results table of a run directory and write its plot data."""
    emit_report(run_dir)
