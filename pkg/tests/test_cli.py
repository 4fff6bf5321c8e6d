import json
import shutil

import pandas as pd
import pytest
from click.testing import CliRunner
from pydantic import ValidationError

from src.cli import ExperimentConfig, PathsConfig, main
from src.core.io import file_sha256
from src.training.report import AGGREGATE_FILE, RESULTS_FILE


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    monkeypatch.delenv("HGNN_SEED", raising=False)
    monkeypatch.delenv("HGNN_DEBUG_CHECKS", raising=False)


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


@pytest.fixture
def config_file(tmp_path, corpus_dir, small_synthetic_config, data_config, small_hgnn, small_baseline, quick_train):
    config = ExperimentConfig(
        synthetic=small_synthetic_config,
        data=data_config,
        hgnn=small_hgnn,
        baseline=small_baseline,
        train=quick_train,
        paths=PathsConfig(data_dir=str(corpus_dir), out_dir=str(tmp_path / "run")),
        grid=[("logreg", "default"), ("hgnn", "node")],
    )
    return config.to_file(tmp_path / "config.json")


class TestConfig:
    def test_round_trip(self, config_file):
        config = ExperimentConfig.from_file(config_file)
        again = ExperimentConfig.model_validate_json(config.model_dump_json())
        assert again == config
        assert again.fingerprint() == config.fingerprint()

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"train": {"epochs": 3, "learnig_rate": 0.1}}))
        with pytest.raises(ValidationError):
            ExperimentConfig.from_file(path)

    @pytest.mark.parametrize(
        "document",
        [
            {"data": {"lookback": 7}},
            {"grid": []},
            {"grid": [["hgnn", "full"], ["hgnn", "full"]]},
            {"grid": [["svm", "default"]]},
        ],
    )
    def test_inconsistent_config_rejected(self, document):
        with pytest.raises(ValidationError):
            ExperimentConfig.model_validate(document)


def test_help_lists_commands_and_rejects_unknown_flags(runner):
    result = runner.invoke(main, ["--help"])
    assert result.exit_code == 0
    for command in ("generate", "train", "evaluate", "ablate", "gradcheck", "report"):
        assert command in result.output
    assert runner.invoke(main, ["train", "--epochs", "3"]).exit_code != 0


def test_generate_is_deterministic(runner, config_file, tmp_path):
    for name in ("a", "b"):
        result = runner.invoke(main, ["generate", "--config", str(config_file), "--out", str(tmp_path / name), "--seed", "3"])
        assert result.exit_code == 0, result.output

    for file in ("daily.csv", "minute.csv", "industry.csv", "manifest.json"):
        assert file_sha256(tmp_path / "a" / file) == file_sha256(tmp_path / "b" / file)
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["seed"] == 3
    assert manifest["rows"]["daily"] == 40 * 200


def test_generate_seed_from_environment(runner, config_file, tmp_path, monkeypatch):
    monkeypatch.setenv("HGNN_SEED", "21")
    result = runner.invoke(main, ["generate", "--config", str(config_file), "--out", str(tmp_path / "env")])
    assert result.exit_code == 0, result.output
    assert json.loads((tmp_path / "env" / "manifest.json").read_text())["seed"] == 21


def test_train_fails_fast_without_industry_file(runner, config_file, corpus_dir, tmp_path):
    broken = tmp_path / "broken"
    shutil.copytree(corpus_dir, broken)
    (broken / "industry.csv").unlink()
    out = tmp_path / "out"

    result = runner.invoke(main, ["train", "--config", str(config_file), "--data", str(broken), "--out", str(out)])
    assert result.exit_code != 0
    assert "industry.csv" in result.output
    assert not out.exists()


def test_train_then_evaluate_reproduces_validation_f1(runner, config_file, tmp_path):
    out = tmp_path / "trained"
    result = runner.invoke(main, ["train", "--config", str(config_file), "--out", str(out), "--preset", "full", "--seed", "1"])
    assert result.exit_code == 0, result.output
    checkpoint = out / "checkpoints" / "hgnn_full_seed1.json"
    assert checkpoint.is_file() and (out / "best.json").is_file()

    results = pd.read_csv(out / RESULTS_FILE)
    val_f1 = results[(results["split"] == "val") & (results["seed"] == 1)]["f1"].iloc[0]

    metrics_path, attention_path = tmp_path / "metrics.json", tmp_path / "attention.csv"
    result = runner.invoke(
        main,
        [
            "evaluate",
            "--checkpoint", str(checkpoint),
            "--config", str(config_file),
            "--split", "val",
            "--out", str(metrics_path),
            "--dump-attention", str(attention_path),
        ],
    )
    assert result.exit_code == 0, result.output
    metrics = json.loads(metrics_path.read_text())
    assert metrics["metrics"]["f1"] == pytest.approx(val_f1, abs=1e-12)
    attention = pd.read_csv(attention_path)
    assert list(attention.columns) == ["day", "stock_id", "weight"]
    assert attention.groupby("day")["weight"].sum().sub(1.0).abs().max() <= 1e-9


def test_ablate_writes_one_row_per_grid_entry(runner, config_file, tmp_path):
    out = tmp_path / "ablation"
    result = runner.invoke(main, ["ablate", "--config", str(config_file), "--out", str(out), "--workers", "2"])
    assert result.exit_code == 0, result.output

    aggregate = pd.read_csv(out / AGGREGATE_FILE)
    assert list(zip(aggregate["model"], aggregate["preset"])) == [("logreg", "default"), ("hgnn", "node")]
    assert (aggregate["n_seeds"] == 2).all()
    assert (out / "table.txt").is_file() and (out / "loss_curves.csv").is_file()
    assert len(list((out / "checkpoints").iterdir())) == 4

    again = runner.invoke(main, ["report", str(out)])
    assert again.exit_code == 0, again.output
    assert "hgnn[node]" in again.output


def test_report_on_empty_dir(runner, tmp_path):
    result = runner.invoke(main, ["report", str(tmp_path)])
    assert result.exit_code != 0
    assert "No runs found" in result.output


def test_gradcheck_passes_and_writes_report(runner, tmp_path):
    path = tmp_path / "gradcheck.json"
    result = runner.invoke(main, ["gradcheck", "--trials", "2", "--out", str(path)])
    assert result.exit_code == 0, result.output
    summary = json.loads(path.read_text())
    assert summary["passed"] and summary["failing"] == []
    assert {"matmul", "softmax_vec", "hgnn_full"} <= set(summary["ops"])
    assert all(entry["max_rel_error"] <= 1e-4 for entry in summary["ops"].values())


def test_gradcheck_names_injected_bug(runner):
    result = runner.invoke(main, ["gradcheck", "--trials", "1", "--inject-bug"])
    assert result.exit_code != 0
    assert "corrupted_tanh" in result.output
