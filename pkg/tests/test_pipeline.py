import json

import pytest

from src.core.errors import DivergenceError, SchemaError
from src.model import load_checkpoint
from src.pipeline import NodeId, RunNodeManager, RunPipeline
from src.training import RunSpec, evaluate_checkpoint, run_single


@pytest.fixture(scope="module")
def pipeline(data_config, small_hgnn, small_baseline, quick_train) -> RunPipeline:
    return RunPipeline(
        data_config=data_config,
        hgnn=small_hgnn,
        baseline=small_baseline,
        train_config=quick_train,
        fingerprint="0123456789abcdef",
    )


def test_graph_has_every_node(pipeline):
    nodes = set(pipeline.graph.get_graph().nodes)
    assert {n.value for n in NodeId} <= nodes


def test_run_from_data_dir_persists_checkpoint(pipeline, corpus_dir, small_data, tmp_path):
    record = pipeline.run(RunSpec(model="hgnn", preset="full", seed=1), data_dir=corpus_dir, out_dir=tmp_path)
    path = tmp_path / "checkpoints" / "hgnn_full_seed1.json"
    assert record.checkpoint_path == str(path)

    checkpoint = load_checkpoint(path)
    assert checkpoint.fingerprint == "0123456789abcdef"
    assert checkpoint.best_val_f1 == record.best_val_f1
    replay = evaluate_checkpoint(checkpoint, small_data.val, small_data.graph)
    assert replay.metrics.f1 == pytest.approx(record.val.f1, abs=1e-12)


def test_run_with_prepared_data_skips_persist(pipeline, small_data):
    record = pipeline.run(RunSpec(model="gcn", seed=2), data=small_data)
    assert record.checkpoint_path is None
    assert record.model == "gcn"
    assert len(record.curve) == record.epochs_ran


@pytest.mark.parametrize("spec", [RunSpec(model="hgnn", preset="node", seed=3), RunSpec(model="logreg", seed=1)])
def test_in_process_run_matches_pipeline(pipeline, small_data, small_hgnn, small_baseline, quick_train, spec):
    direct = run_single(spec, data=small_data, hgnn=small_hgnn, baseline=small_baseline, train_config=quick_train)
    piped = pipeline.run(spec, data=small_data)
    skip = {"wall_clock", "checkpoint_path"}
    assert direct.model_dump(exclude=skip) == piped.model_dump(exclude=skip)

def test_run_needs_data(pipeline):
    with pytest.raises(ValueError, match="neither prepared data nor a data directory"):
        pipeline.run(RunSpec(model="logreg", seed=1))


def test_missing_corpus_file(pipeline, tmp_path):
    with pytest.raises(SchemaError, match="industry.csv"):
        pipeline.run(RunSpec(model="logreg", seed=1), data_dir=tmp_path)


def test_divergence_takes_abort_branch(pipeline, small_data, tmp_path, monkeypatch):
    def diverge(*args, **kwargs):
        raise DivergenceError("loss is nan at epoch 1, day 7")

    monkeypatch.setattr("src.pipeline.nodes.train", diverge)
    with pytest.raises(DivergenceError, match="epoch 1"):
        pipeline.run(RunSpec(model="hgnn", preset="node", seed=4), data=small_data, out_dir=tmp_path)

    marker = json.loads((tmp_path / "failed" / "hgnn_node_seed4.json").read_text())
    assert marker == {"model": "hgnn", "preset": "node", "seed": 4, "error": "loss is nan at epoch 1, day 7"}
    assert not (tmp_path / "checkpoints").exists()


def test_debug_checks_from_environment(small_data, small_hgnn, monkeypatch):
    seen = {}

    def fake_train(model, *args, **kwargs):
        seen["debug"] = model.config.debug_checks
        return "trained"

    monkeypatch.setattr("src.pipeline.nodes.train", fake_train)
    monkeypatch.setenv("HGNN_DEBUG_CHECKS", "1")
    manager = RunNodeManager(hgnn=small_hgnn)
    out = manager.train_model({"spec": RunSpec(model="hgnn", preset="full", seed=1), "data": small_data})
    assert seen["debug"] is True
    assert out["result"] == "trained"
    assert manager.divergence_condition(out) == "evaluate"
    assert manager.divergence_condition({"error": "nan"}) == "abort"
