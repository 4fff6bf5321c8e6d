import logging
import math
from functools import partial

import numpy as np
import pandas as pd
import pytest

from src.core.errors import ContractError, DivergenceError, EmptySplitError, NoRunsFoundError, ShapeError
from src.diffcore import DiffArray
from src.market import SyntheticConfig, generate_synthetic
from src.market.corpus import Corpus, DataConfig, corpus_from_market
from src.model import BaselineConfig, HgnnConfig, build_model
from src.training import (
    AdamState,
    ExperimentReport,
    RunRecord,
    RunSpec,
    TrainConfig,
    adam_step,
    aggregate_runs,
    bce_loss,
    classification_metrics,
    clip_global_norm,
    confusion_counts,
    emit_report,
    evaluate,
    evaluate_checkpoint,
    load_aggregate,
    majority_accuracy,
    mean_loss,
    mean_std,
    multi_seed_experiment,
    prepare_data,
    run_single,
    train,
    write_experiment,
)
from src.training.experiment import SplitScores
from src.training.report import AGGREGATE_FILE, RESULT_COLUMNS, RESULTS_FILE, results_table
from src.training.trainer import check_disjoint


def _scores(accuracy: float, f1: float) -> SplitScores:
    return SplitScores(accuracy=accuracy, f1=f1, tp=1, fp=0, fn=0, tn=1, loss=0.5, majority_accuracy=0.5)


def _record(spec: RunSpec, accuracy: float = 0.5, f1: float = 0.5) -> RunRecord:
    return RunRecord(
        model=spec.model,
        preset=spec.preset,
        seed=spec.seed,
        epochs_ran=1,
        best_epoch=1,
        best_val_f1=f1,
        n_params=3,
        wall_clock=0.0,
        val=_scores(accuracy, f1),
        test=_scores(accuracy, f1),
        curve=[],
    )


class TestLoss:
    def test_closed_forms(self):
        assert bce_loss(0.0, 1) == pytest.approx(math.log(2.0))
        assert bce_loss(0.0, 0) == pytest.approx(0.693147, abs=1e-6)
        assert bce_loss(50.0, 1) <= 1e-20
        assert math.isfinite(bce_loss(-1000.0, 1))

    def test_invalid_inputs(self):
        with pytest.raises(ContractError):
            bce_loss(0.0, 2)
        with pytest.raises(ContractError):
            bce_loss(float("nan"), 1)


class TestAdam:
    def test_first_step_moves_by_learning_rate(self):
        params = {"p": np.array([[1.0, -2.0]])}
        grads = {"p": np.array([[0.5, -3.0]])}
        updated, state = adam_step(params, grads, AdamState(), learning_rate=1e-3)
        np.testing.assert_allclose(updated["p"] - params["p"], [[-1e-3, 1e-3]], rtol=1e-6)
        assert state.step == 1
        np.testing.assert_array_equal(params["p"], [[1.0, -2.0]])

    def test_zero_gradient_keeps_parameters(self):
        params = {"p": np.array([[0.25]])}
        updated, _ = adam_step(params, {"p": np.zeros((1, 1))}, AdamState())
        np.testing.assert_array_equal(updated["p"], params["p"])

    def test_scalar_convergence(self):
        params, state = {"p": np.zeros((1, 1))}, AdamState()
        for _ in range(200):
            grads = {"p": 2.0 * (params["p"] - 3.0)}
            params, state = adam_step(params, grads, state, learning_rate=0.1)
        assert abs(params["p"][0, 0] - 3.0) <= 0.1

    def test_global_norm_clipping(self):
        grads = {"a": np.array([[3.0, 0.0]]), "b": np.array([[0.0, 4.0]])}
        clipped, norm = clip_global_norm(grads, 1.0)
        assert norm == pytest.approx(5.0)
        np.testing.assert_allclose(clipped["a"], [[0.6, 0.0]])
        np.testing.assert_allclose(clipped["b"], [[0.0, 0.8]])
        untouched, _ = clip_global_norm(grads, 10.0)
        np.testing.assert_array_equal(untouched["a"], grads["a"])


class TestMetrics:
    LABELS = [1, 1, 1, 0, 0, 0, 0, 0, 0, 0]
    PREDICTIONS = [1, 1, 0, 1, 0, 0, 0, 0, 0, 0]

    def test_worked_example(self):
        metrics = classification_metrics(self.LABELS, self.PREDICTIONS)
        c = metrics.confusion
        assert (c.tp, c.fp, c.fn, c.tn) == (2, 1, 1, 6)
        assert metrics.precision == pytest.approx(2 / 3)
        assert metrics.recall == pytest.approx(2 / 3)
        assert metrics.f1 == pytest.approx(2 / 3)
        assert metrics.accuracy == pytest.approx(0.8)

    def test_perfect_and_degenerate(self):
        perfect = classification_metrics([0, 1, 1], [0, 1, 1])
        assert (perfect.accuracy, perfect.f1) == (1.0, 1.0)
        assert classification_metrics([0, 0], [0, 0]).f1 == 0.0
        with pytest.raises(ContractError):
            classification_metrics([], [])
        with pytest.raises(ShapeError):
            confusion_counts([0, 1], [1])

    def test_order_invariant(self, rng):
        labels, predictions = rng.integers(0, 2, 50), rng.integers(0, 2, 50)
        perm = rng.permutation(50)
        assert classification_metrics(labels, predictions) == classification_metrics(labels[perm], predictions[perm])

    def test_matches_brute_force_count(self, rng):
        labels, predictions = rng.integers(0, 2, 200), rng.integers(0, 2, 200)
        counts = {"tp": 0, "fp": 0, "fn": 0, "tn": 0}
        for y, p in zip(labels, predictions):
            key = ("t" if y == p else "f") + ("p" if p == 1 else "n")
            counts[key] += 1
        c = confusion_counts(labels, predictions)
        assert (c.tp, c.fp, c.fn, c.tn) == (counts["tp"], counts["fp"], counts["fn"], counts["tn"])

    def test_closed_forms_on_random_confusions(self, rng):
        draws = rng.integers(0, 25, size=(1000, 4))
        edge_cases = np.array([[0, 0, 7, 0], [0, 4, 3, 0], [0, 0, 2, 5], [3, 0, 0, 0]])
        for tp, fp, tn, fn in np.concatenate([edge_cases, draws]):
            if tp + fp + tn + fn == 0:
                continue
            labels = [1] * tp + [0] * fp + [1] * fn + [0] * tn
            predictions = [1] * tp + [1] * fp + [0] * fn + [0] * tn
            metrics = classification_metrics(labels, predictions)
            c = metrics.confusion
            assert (c.tp, c.fp, c.fn, c.tn) == (tp, fp, fn, tn)

            assert abs(metrics.accuracy - (tp + tn) / (tp + fp + tn + fn)) <= 1e-12
            precision = tp / (tp + fp) if tp + fp else 0.0
            recall = tp / (tp + fn) if tp + fn else 0.0
            expected_f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
            assert abs(metrics.f1 - expected_f1) <= 1e-12
            if tp:
                assert abs(metrics.f1 - 2 * tp / (2 * tp + fp + fn)) <= 1e-12

    def test_majority_accuracy(self):
        assert majority_accuracy([1, 0, 0, 0]) == 0.75
        assert majority_accuracy([1, 1, 1, 0]) == 0.75

    def test_mean_std(self, caplog):
        mean, std = mean_std([0.6, 0.7])
        assert mean == pytest.approx(0.65)
        assert std == pytest.approx(0.0707107, abs=1e-6)
        with caplog.at_level(logging.WARNING):
            assert mean_std([0.6]) == (0.6, 0.0)
        assert "single run" in caplog.text


class TestTrain:
    def test_deterministic_per_seed(self, small_data, small_hgnn, quick_train):
        model = build_model("hgnn", "full", hgnn=small_hgnn, graph=small_data.graph)
        first = train(model, small_data.train, small_data.val, quick_train, seed=1)
        second = train(model, small_data.train, small_data.val, quick_train, seed=1)
        for name, value in first.params.values.items():
            np.testing.assert_array_equal(second.params[name], value)
        assert first.curve == second.curve

    def test_first_epoch_lowers_training_loss(self, small_data, small_hgnn):
        model = build_model("hgnn", "full", hgnn=small_hgnn, graph=small_data.graph)
        result = train(model, small_data.train, small_data.val, TrainConfig(epochs=1, learning_rate=1e-2), seed=3)
        assert mean_loss(model, result.params, small_data.train) < result.initial_train_loss

    def test_best_epoch_is_first_maximum(self, small_data, small_hgnn):
        model = build_model("hgnn", "relation", hgnn=small_hgnn, graph=small_data.graph)
        config = TrainConfig(epochs=4, patience=2, learning_rate=1e-2)
        result = train(model, small_data.train, small_data.val, config, seed=2)
        f1s = [r.val_f1 for r in result.curve]
        assert result.best_val_f1 == max(f1s)
        assert result.best_epoch == f1s.index(max(f1s)) + 1
        assert result.epochs_ran == len(result.curve) <= 4

    def test_checkpoint_reproduces_validation_f1(self, small_data, small_hgnn, quick_train):
        model = build_model("hgnn", "full", hgnn=small_hgnn, graph=small_data.graph)
        result = train(model, small_data.train, small_data.val, quick_train, seed=1)
        checkpoint = result.checkpoint(model, fingerprint="abc")
        replay = evaluate_checkpoint(checkpoint, small_data.val, small_data.graph, with_attention=True)
        assert replay.metrics.f1 == result.best_val_f1
        assert replay.attention is not None
        assert len(replay.attention) == len(small_data.val.days) * small_data.graph.node_count

    def test_empty_split_rejected(self, small_data, small_hgnn, quick_train):
        model = build_model("hgnn", "node", hgnn=small_hgnn)
        empty = small_data.val.subset([])
        with pytest.raises(EmptySplitError):
            train(model, small_data.train, empty, quick_train, seed=1)

    def test_divergence_aborts(self, small_data, small_hgnn, quick_train, monkeypatch):
        model = build_model("hgnn", "node", hgnn=small_hgnn)
        monkeypatch.setattr("src.training.trainer.day_loss", lambda logits, labels: DiffArray.constant([[float("nan")]]))
        with pytest.raises(DivergenceError, match="epoch 1"):
            train(model, small_data.train, small_data.val, quick_train, seed=1)

    def test_test_split_never_reaches_training(self, small_market, small_data, data_config, small_hgnn, quick_train):
        first_test_day = min(small_data.test.day_indices)

        def _scaled(frame: pd.DataFrame) -> pd.DataFrame:
            frame = frame.copy()
            later = frame["day"] >= first_test_day
            frame.loc[later, "volume"] = frame.loc[later, "volume"] * 3.0
            return frame

        altered = prepare_data(
            Corpus(daily=_scaled(small_market.daily), minute=_scaled(small_market.minute), industries=small_market.industries),
            data_config,
        )
        assert altered.test.day_indices == small_data.test.day_indices
        assert not np.array_equal(altered.test.days[-1].features, small_data.test.days[-1].features)

        model = build_model("hgnn", "full", hgnn=small_hgnn, graph=small_data.graph)
        original = train(model, small_data.train, small_data.val, quick_train, seed=1).checkpoint(model)
        rerun = train(model, altered.train, altered.val, quick_train, seed=1).checkpoint(model)
        assert original.params_fingerprint == rerun.params_fingerprint

    def test_splits_are_disjoint(self, small_data):
        check_disjoint(small_data.train, small_data.val, small_data.test)
        with pytest.raises(ContractError):
            check_disjoint(small_data.train, small_data.train)
        assert max(small_data.train.day_indices) < min(small_data.val.day_indices)
        assert max(small_data.val.day_indices) < min(small_data.test.day_indices)


class TestExperiment:
    def test_two_point_aggregate(self):
        runs = [_record(RunSpec(model="hgnn", preset="full", seed=1), 0.6, 0.5), _record(RunSpec(model="hgnn", preset="full", seed=2), 0.7, 0.5)]
        [row] = aggregate_runs(runs)
        assert row.acc_mean == pytest.approx(0.65)
        assert row.acc_std == pytest.approx(0.0707107, abs=1e-6)
        assert row.f1_std == 0.0
        assert row.n_seeds == 2

    def test_thread_pool_keeps_grid_order(self):
        grid = [("hgnn", "full"), ("logreg", "default")]
        serial = multi_seed_experiment(grid, [1, 2, 3], _record, workers=1)
        pooled = multi_seed_experiment(grid, [1, 2, 3], _record, workers=3)
        order = [(r.model, r.seed) for r in serial.runs]
        assert order == [(r.model, r.seed) for r in pooled.runs]
        assert order[:3] == [("hgnn", 1), ("hgnn", 2), ("hgnn", 3)]
        assert len(serial.aggregate) == 2


@pytest.fixture(scope="module")
def experiment(small_data, small_hgnn, small_baseline, quick_train) -> ExperimentReport:
    run = partial(run_single, data=small_data, hgnn=small_hgnn, baseline=small_baseline, train_config=quick_train)
    return multi_seed_experiment([("logreg", "default"), ("hgnn", "node")], quick_train.seeds, run, fingerprint="f" * 16)


class TestReport:
    def test_written_files(self, experiment, tmp_path):
        out = write_experiment(experiment, tmp_path / "run")
        results = pd.read_csv(out / RESULTS_FILE)
        assert list(results.columns) == RESULT_COLUMNS
        assert len(results) == 2 * len(experiment.runs)
        assert sorted(p.name for p in (out / "curves").iterdir()) == [
            "hgnn_node_seed1.csv",
            "hgnn_node_seed2.csv",
            "logreg_default_seed1.csv",
            "logreg_default_seed2.csv",
        ]
        curve = pd.read_csv(out / "curves" / "hgnn_node_seed1.csv")
        assert list(curve.columns) == ["epoch", "train_loss", "val_loss", "val_f1"]

    def test_aggregate_recomputes_from_results(self, experiment, tmp_path):
        out = write_experiment(experiment, tmp_path / "run")
        results = pd.read_csv(out / RESULTS_FILE)
        aggregate = load_aggregate(out).set_index(["model", "preset"])
        recomputed = results[results["split"] == "test"].groupby(["model", "preset"]).agg(
            acc_mean=("accuracy", "mean"), acc_std=("accuracy", "std"), f1_mean=("f1", "mean"), f1_std=("f1", "std")
        )
        for column in ("acc_mean", "acc_std", "f1_mean", "f1_std"):
            diff = (recomputed[column] - aggregate.loc[recomputed.index, column]).abs().max()
            assert diff <= 1e-12

    def test_emit_report(self, experiment, tmp_path):
        out = write_experiment(experiment, tmp_path / "run")
        emit_report(out)
        table_text = (out / "table.txt").read_text()
        assert "logreg" in table_text and "hgnn[node]" in table_text
        first = experiment.aggregate[0]
        assert f"{100 * first.acc_mean:.2f}±{100 * first.acc_std:.2f}" in table_text

        curves = pd.read_csv(out / "loss_curves.csv")
        assert len(curves) == sum(len(r.curve) for r in experiment.runs)
        assert len(pd.read_csv(out / "ablation_bars.csv")) == 2
        assert results_table(load_aggregate(out)).row_count == 2

    def test_empty_run_dir(self, tmp_path):
        with pytest.raises(NoRunsFoundError):
            load_aggregate(tmp_path)
        with pytest.raises(NoRunsFoundError):
            emit_report(tmp_path)

    def test_header_only_aggregate(self, tmp_path):
        (tmp_path / AGGREGATE_FILE).write_text("model,preset,acc_mean,acc_std,f1_mean,f1_std,n_seeds\n")
        with pytest.raises(NoRunsFoundError):
            load_aggregate(tmp_path)


@pytest.mark.slow
def test_full_model_beats_baselines_on_default_market():
    market = generate_synthetic(SyntheticConfig())
    data = prepare_data(corpus_from_market(market), DataConfig())
    run = partial(run_single, data=data, hgnn=HgnnConfig(), baseline=BaselineConfig(), train_config=TrainConfig())

    full = run(RunSpec(model="hgnn", preset="full", seed=1)).test
    node = run(RunSpec(model="hgnn", preset="node", seed=1)).test
    logreg = run(RunSpec(model="logreg", seed=1)).test

    assert full.accuracy >= 0.70
    assert full.accuracy - full.majority_accuracy >= 0.15
    assert full.accuracy - logreg.accuracy >= 0.05
    assert full.accuracy - node.accuracy >= 0.03
