import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.core.errors import ContractError, SchemaError, ShapeError
from src.diffcore import DiffArray
from src.industry import build_graph
from src.market.windows import DaySample
from src.model import (
    HgnnConfig,
    HgnnModel,
    View,
    build_model,
    classify,
    curb_mlp,
    fuse_node_state,
    glorot_bound,
    graph_convolve,
    hgnn_shapes,
    hierarchical_fuse,
    init_params,
    load_checkpoint,
    lstm_encode,
    market_attention,
    model_from_description,
    save_checkpoint,
)
from src.model.checkpoint import Checkpoint
from src.model.suite import run_model_suite, toy_config, toy_day, toy_graph


def _const(values: dict) -> dict[str, DiffArray]:
    return {name: DiffArray.constant(np.asarray(v, dtype=np.float64)) for name, v in values.items()}


def _sigmoid(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


class TestConfig:
    def test_views_are_ordered(self):
        config = HgnnConfig(enabled_views=["market", "node"])
        assert config.enabled_views == [View.NODE, View.MARKET]

    @pytest.mark.parametrize("views", [[], ["relation"], ["node", "node"]])
    def test_invalid_views(self, views):
        with pytest.raises(ValidationError):
            HgnnConfig(enabled_views=views)

    def test_presets(self):
        assert HgnnConfig.for_preset("M").enabled_views == [View.NODE, View.MARKET]
        assert HgnnConfig.for_preset("I").preset_name() == "full"
        with pytest.raises(ValueError):
            HgnnConfig.for_preset("everything")

    def test_unknown_field_rejected(self):
        with pytest.raises(ValidationError):
            HgnnConfig(hiden=4)


class TestInitParams:
    def test_deterministic(self):
        shapes = hgnn_shapes(HgnnConfig())
        first, second = init_params(shapes, 3), init_params(shapes, 3)
        for name in shapes:
            np.testing.assert_array_equal(first[name], second[name])

    def test_shapes_and_bounds(self):
        config = HgnnConfig(hidden=8, n_features=6)
        params = init_params(hgnn_shapes(config), 0)
        assert params["lstm.u.P"].shape == (8, 6)
        assert params["classifier.Q"].shape == (24, 1)
        for name, value in params.values.items():
            if name.endswith((".b", ".b_f", ".b_a")):
                assert not value.any()
            else:
                assert np.max(np.abs(value)) <= glorot_bound(value.shape)

    def test_parameter_count_follows_config(self):
        full = hgnn_shapes(HgnnConfig())
        node = hgnn_shapes(HgnnConfig.for_preset("node"))
        assert "graph.pi" in full and "graph.pi" not in node
        assert not any(name.startswith("attention.") for name in node)


class TestLstm:
    def test_zero_parameters_give_zero_state(self, rng):
        shapes = hgnn_shapes(HgnnConfig(hidden=3))
        zeros = _const({name: np.zeros(shape) for name, shape in shapes.items() if name.startswith("lstm.")})
        h = lstm_encode(rng.normal(size=(2, 10, 6)), zeros)
        np.testing.assert_array_equal(h.value, np.zeros((2, 3)))

    def test_scalar_rollout(self):
        weights = {"i": (0.5, -0.3, 0.1), "r": (0.8, 0.2, -0.2), "o": (-0.4, 0.6, 0.3), "u": (1.1, -0.7, 0.05)}
        p = {}
        for gate, (P, Q, b) in weights.items():
            p[f"lstm.{gate}.P"], p[f"lstm.{gate}.Q"], p[f"lstm.{gate}.b"] = [[P]], [[Q]], [[b]]
        xs = [0.7, -1.2, 0.4]

        h = c = 0.0
        for x in xs:
            pre = {g: P * x + Q * h + b for g, (P, Q, b) in weights.items()}
            i, r, o = _sigmoid(pre["i"]), _sigmoid(pre["r"]), _sigmoid(pre["o"])
            c = r * c + i * math.tanh(pre["u"])
            h = o * math.tanh(c)

        out = lstm_encode(np.array(xs).reshape(3, 1), _const(p))
        assert out.value[0, 0] == pytest.approx(h, abs=1e-14)

    def test_state_in_open_interval(self, rng):
        params = init_params(hgnn_shapes(HgnnConfig(hidden=5)), 1)
        h = lstm_encode(rng.normal(size=(6, 10, 6)), _const(params.values)).value
        assert np.all(np.abs(h) < 1.0)

    def test_feature_mismatch(self, rng):
        params = init_params(hgnn_shapes(HgnnConfig(hidden=2)), 1)
        with pytest.raises(ShapeError):
            lstm_encode(rng.normal(size=(1, 4, 5)), _const(params.values))


class TestCurbMlp:
    def test_zero_weights(self, rng):
        p = _const({"mlp.0.W": np.zeros((5, 4)), "mlp.0.b": np.zeros((1, 4)), "mlp.1.W": np.zeros((4, 2)), "mlp.1.b": np.zeros((1, 2))})
        np.testing.assert_array_equal(curb_mlp(rng.normal(size=(3, 5)), p).value, np.zeros((3, 2)))

    def test_identity_on_positive_inputs(self):
        d = np.array([[0.5, 1.0, 2.0, 3.0, 4.0]])
        p = _const({"mlp.0.W": np.eye(5), "mlp.0.b": np.zeros((1, 5)), "mlp.1.W": np.eye(5, 4), "mlp.1.b": np.zeros((1, 4))})
        np.testing.assert_array_equal(curb_mlp(d, p).value, d[:, :4])

    def test_last_layer_has_no_activation(self):
        p = _const({"mlp.0.W": -np.eye(2), "mlp.0.b": np.zeros((1, 2))})
        np.testing.assert_array_equal(curb_mlp(np.array([[1.0, 2.0]]), p).value, [[-1.0, -2.0]])

    def test_needs_layers(self):
        with pytest.raises(ContractError):
            curb_mlp(np.ones((1, 5)), {})


class TestFusion:
    def test_regular_nodes_pass_through(self, rng):
        h = DiffArray.constant([[0.3, -0.1], [0.2, 0.4]])
        p = _const({"fusion.W_f": rng.normal(size=(4, 2)), "fusion.b_f": rng.normal(size=(1, 2))})
        l = DiffArray.constant([[1.0, 1.0]])
        e = fuse_node_state(h, l, [1], p).value
        np.testing.assert_array_equal(e[0], [0.3, -0.1])
        assert np.all(np.abs(e[1]) < 1.0)

    def test_zero_fusion_weights(self):
        h = DiffArray.constant([[0.3, -0.1]])
        p = _const({"fusion.W_f": np.zeros((4, 2)), "fusion.b_f": np.zeros((1, 2))})
        e = fuse_node_state(h, DiffArray.constant([[5.0, 5.0]]), [0], p).value
        np.testing.assert_array_equal(e, [[0.0, 0.0]])

    def test_no_curb_stocks(self):
        h = DiffArray.constant([[0.3, -0.1]])
        assert fuse_node_state(h, None, [], {}) is h

    def test_misaligned_rows(self):
        h = DiffArray.constant(np.zeros((3, 2)))
        with pytest.raises(ShapeError):
            fuse_node_state(h, DiffArray.constant(np.zeros((2, 2))), [0], {})


class TestGraphConvolve:
    def test_isolated_node(self):
        e = DiffArray.constant([[0.4, -2.0]])
        out = graph_convolve(e, build_graph({"S1": "A"}), DiffArray.constant(np.eye(2)))
        np.testing.assert_array_equal(out.value, e.value)

    def test_two_clique_averages(self):
        e = DiffArray.constant([[1.0, 2.0], [3.0, -4.0]])
        out = graph_convolve(e, build_graph({"S1": "A", "S2": "A"}), DiffArray.constant(np.eye(2))).value
        np.testing.assert_allclose(out, [[2.0, -1.0], [2.0, -1.0]])

    @pytest.mark.parametrize("n", [30, 64])
    def test_matches_dense_oracle(self, rng, n):
        labels = rng.integers(0, 6, size=n)
        graph = build_graph({f"S{k:02d}": f"IND{labels[k]}" for k in range(n)})
        E, pi = rng.normal(size=(n, 5)), rng.normal(size=(5, 5))
        out = graph_convolve(DiffArray.constant(E), graph, DiffArray.constant(pi)).value
        assert np.max(np.abs(out - graph.to_dense_normalized() @ E @ pi.T)) <= 1e-10

    def test_row_mismatch(self):
        with pytest.raises(ShapeError):
            graph_convolve(DiffArray.constant(np.zeros((3, 2))), build_graph({"S1": "A"}))


class TestMarketAttention:
    def _params(self, rng, V=3, U=4, zero_p=False):
        return _const(
            {
                "attention.P_a": np.zeros((V, 1)) if zero_p else rng.normal(size=(V, 1)),
                "attention.Q_a": rng.normal(size=(V, U)),
                "attention.b_a": rng.normal(size=(1, V)),
            }
        )

    def test_zero_scorer_is_uniform(self, rng):
        A = rng.normal(size=(7, 4))
        w, g = market_attention(DiffArray.constant(A), self._params(rng, zero_p=True))
        assert np.max(np.abs(w.value - 1.0 / 7)) <= 1e-15
        np.testing.assert_allclose(g.value, A.mean(axis=0, keepdims=True), atol=1e-12)

    def test_single_stock(self, rng):
        A = rng.normal(size=(1, 4))
        w, g = market_attention(DiffArray.constant(A), self._params(rng))
        np.testing.assert_array_equal(w.value, [[1.0]])
        np.testing.assert_allclose(g.value, A, atol=1e-15)

    def test_weights_normalized(self, rng):
        w, g = market_attention(DiffArray.constant(rng.normal(size=(9, 4))), self._params(rng), debug_checks=True)
        assert abs(w.value.sum() - 1.0) <= 1e-12
        assert g.shape == (1, 4)

    def test_constant_score_shift_leaves_weights(self, rng):
        A = DiffArray.constant(rng.normal(size=(12, 4)))
        params = self._params(rng)
        w, g = market_attention(A, params)

        # an extra score unit that ignores A adds 3 * tanh(0.7) to every stock's score
        shifted = _const(
            {
                "attention.P_a": np.vstack([params["attention.P_a"].value, [[3.0]]]),
                "attention.Q_a": np.vstack([params["attention.Q_a"].value, np.zeros((1, 4))]),
                "attention.b_a": np.hstack([params["attention.b_a"].value, [[0.7]]]),
            }
        )
        w_shifted, g_shifted = market_attention(A, shifted)

        assert np.max(np.abs(w_shifted.value - w.value)) <= 1e-12
        assert np.max(np.abs(g_shifted.value - g.value)) <= 1e-12


class TestFusionAndClassifier:
    def test_hierarchical_concat(self):
        e, a, g = (DiffArray.constant(v) for v in ([[1.0, 2.0]], [[3.0, 4.0]], [[5.0, 6.0]]))
        full = hierarchical_fuse(e, a, g, [View.NODE, View.RELATION, View.MARKET]).value
        np.testing.assert_array_equal(full, [[1, 2, 3, 4, 5, 6]])
        assert hierarchical_fuse(e, a, g, [View.NODE]).value.shape == (1, 2)
        assert hierarchical_fuse(e, a, None, [View.NODE, View.RELATION]).value.shape == (1, 4)

    def test_missing_view_state(self):
        e = DiffArray.constant([[1.0]])
        with pytest.raises(ContractError):
            hierarchical_fuse(e, None, None, [View.NODE, View.RELATION])

    def test_classify(self):
        H = DiffArray.constant([[2.0, 7.0, -1.0]])
        zero = classify(H, _const({"classifier.Q": np.zeros((3, 1)), "classifier.b": [[0.0]]}))
        assert zero.item() == 0.0
        picked = classify(H, _const({"classifier.Q": [[1.0], [0.0], [0.0]], "classifier.b": [[0.0]]}))
        assert picked.item() == 2.0
        with pytest.raises(ShapeError):
            classify(H, _const({"classifier.Q": np.zeros((2, 1)), "classifier.b": [[0.0]]}))


class TestForward:
    def test_single_stock_node_view(self, rng):
        day = toy_day(rng, n_stocks=1, n_curb=1)
        model = HgnnModel(preset="node", config=toy_config(enabled_views=["node"], curb_mlp=False))
        params = model.init_params(0)
        logits = model.predict(day, params).logits.value
        p = _const(params.values)
        expected = classify(lstm_encode(day.features, p), p).value
        np.testing.assert_allclose(logits, expected, atol=1e-15)

    def test_node_view_never_reads_graph(self, rng):
        day = toy_day(rng)
        config = toy_config(enabled_views=["node"])
        without = HgnnModel(preset="node", config=config)
        with_graph = HgnnModel(preset="node", config=config, graph=toy_graph())
        params = without.init_params(4)
        np.testing.assert_array_equal(without.predict(day, params).logits.value, with_graph.predict(day, params).logits.value)

    def test_relation_view_needs_graph(self, rng):
        model = HgnnModel(preset="full", config=toy_config())
        with pytest.raises(ContractError):
            model.predict(toy_day(rng), model.init_params(0))

    def test_permutation_invariance(self, rng):
        n = 20
        graph = toy_graph(n, 4)
        day = toy_day(rng, n_stocks=n, n_curb=6)
        model = HgnnModel(preset="full", config=toy_config(debug_checks=True), graph=graph)
        params = model.init_params(2)
        base = model.predict(day, params)

        for _ in range(10):
            perm = rng.permutation(n)
            inverse = np.empty_like(perm)
            inverse[perm] = np.arange(n)
            permuted_day = DaySample(
                day=day.day,
                features=day.features[perm],
                has_history=day.has_history[perm],
                curb_nodes=inverse[day.curb_nodes],
                indicators=day.indicators,
                labels=day.labels,
            )
            moved = model.model_copy(update={"graph": graph.relabel(perm)}).predict(permuted_day, params)

            assert np.max(np.abs(moved.logits.value - base.logits.value)) <= 1e-10
            # row k of the permuted day is stock perm[k]
            np.testing.assert_allclose(moved.attention, base.attention[perm], atol=1e-12)

    def test_missing_history_rows_are_zero(self, rng):
        day = toy_day(rng, n_stocks=5, n_curb=1)
        blank = np.ones(5, dtype=bool)
        blank[[k for k in range(5) if k != day.curb_nodes[0]][0]] = False
        masked = day.model_copy(update={"has_history": blank})
        model = HgnnModel(preset="full", config=toy_config(), graph=toy_graph(5, 2))
        out = model.predict(masked, model.init_params(0))
        assert out.attention.shape == (5,)
        assert np.all(np.isfinite(out.logits.value))


def test_model_gradient_suite_passes():
    reports = run_model_suite(range(5))
    failing = [r.label for r in reports if not r.passed]
    assert failing == []


def test_checkpoint_round_trip(tmp_path, rng):
    graph = toy_graph()
    model = build_model("hgnn", "full", hgnn=toy_config(), graph=graph)
    params = model.init_params(9)
    for name in params.values:
        params.values[name] = params.values[name] + rng.normal(scale=1e-3, size=params.values[name].shape)

    checkpoint = Checkpoint.from_params(params, kind=model.kind, preset=model.preset, model=model.describe(), seed=9)
    loaded = load_checkpoint(save_checkpoint(checkpoint, tmp_path / "ckpt.json"))
    restored = loaded.params()
    for name, value in params.values.items():
        np.testing.assert_array_equal(restored[name], value)
    assert loaded.params_fingerprint == checkpoint.params_fingerprint

    rebuilt = model_from_description(loaded.model, graph=graph)
    day = toy_day(rng)
    np.testing.assert_array_equal(rebuilt.predict(day, restored).logits.value, model.predict(day, params).logits.value)


def test_invalid_checkpoint(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{}")
    with pytest.raises(SchemaError):
        load_checkpoint(path)
    with pytest.raises(SchemaError):
        load_checkpoint(tmp_path / "missing.json")


def test_build_model_rejects_unknown():
    with pytest.raises(ValueError):
        build_model("transformer")
    with pytest.raises(ValueError):
        build_model("hgnn", "everything")
