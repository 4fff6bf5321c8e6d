"""Finite-difference gradient checks of the model layers and full forward passes."""

import logging
from typing import Callable, Iterable, Mapping

import numpy as np

from src.diffcore import DiffArray, GradCheckReport, grad_check, ops
from src.industry import IndustryGraph, build_graph
from src.market.windows import DaySample
from .base import DayModel
from .baselines import GcnModel, LogRegModel, LstmModel
from .config import HgnnConfig
from .hgnn import HgnnModel, curb_mlp, graph_convolve, lstm_encode, market_attention

logger = logging.getLogger(__name__)

ModelCase = Callable[[np.random.Generator], tuple[dict[str, np.ndarray], Callable[[Mapping[str, DiffArray]], DiffArray]]]


def toy_day(
    rng: np.random.Generator,
    n_stocks: int = 4,
    lookback: int = 5,
    n_features: int = 6,
    n_indicators: int = 5,
    n_curb: int = 2,
    day: int = 0,
) -> DaySample:
    """A random day with every stock having history and `n_curb` labelled curb stocks."""
    curb_nodes = np.sort(rng.choice(n_stocks, size=n_curb, replace=False))
    return DaySample(
        day=day,
        features=rng.normal(size=(n_stocks, lookback, n_features)),
        has_history=np.ones(n_stocks, dtype=bool),
        curb_nodes=curb_nodes.astype(np.int64),
        indicators=rng.normal(size=(n_curb, n_indicators)),
        labels=rng.integers(0, 2, size=n_curb).astype(np.int64),
    )


def toy_graph(n_stocks: int = 4, n_industries: int = 2) -> IndustryGraph:
    return build_graph({f"S{i}": f"IND{i % n_industries}" for i in range(n_stocks)})


def toy_config(**overrides) -> HgnnConfig:
    settings = {"lookback": 5, "hidden": 4, "attention_dim": 3, "mlp_hidden_dims": [3]}
    settings.update(overrides)
    return HgnnConfig(**settings)


def _randomized(model: DayModel, rng: np.random.Generator) -> dict[str, np.ndarray]:
    # zero biases hide bias-path errors, so draw every parameter
    return {name: rng.uniform(-1.0, 1.0, size=shape) for name, shape in model.parameter_shapes().items()}


def _model_case(build: Callable[[], DayModel]) -> ModelCase:
    def case(rng: np.random.Generator):
        model = build()
        day = toy_day(rng)
        params = _randomized(model, rng)
        return params, lambda p: ops.bce_with_logits(model.forward(day, p).logits, day.labels)
    return case


def _projected(value: Callable[[Mapping[str, DiffArray]], DiffArray], shape: tuple[int, int], rng: np.random.Generator):
    weights = DiffArray.constant(rng.normal(size=shape))
    return lambda p: ops.reduce_sum(ops.hadamard(value(p), weights))


def _lstm_case(rng):
    model = LstmModel(n_features=3, hidden=4)
    params = _randomized(model, rng)
    windows = rng.normal(size=(3, 5, 3))
    return params, _projected(lambda p: lstm_encode(windows, p), (3, 4), rng)


def _mlp_case(rng):
    params = {
        "mlp.0.W": rng.uniform(-1, 1, size=(5, 4)),
        "mlp.0.b": rng.uniform(-1, 1, size=(1, 4)),
        "mlp.1.W": rng.uniform(-1, 1, size=(4, 3)),
        "mlp.1.b": rng.uniform(-1, 1, size=(1, 3)),
        "d": rng.normal(size=(2, 5)),
    }
    return params, _projected(lambda p: curb_mlp(p["d"], p), (2, 3), rng)


def _graph_case(rng):
    graph = toy_graph(6, 2)
    params = {"E": rng.normal(size=(6, 4)), "graph.pi": rng.uniform(-1, 1, size=(4, 4))}
    return params, _projected(lambda p: graph_convolve(p["E"], graph, p["graph.pi"]), (6, 4), rng)


def _attention_case(rng):
    params = {
        "A": rng.normal(size=(5, 4)),
        "attention.P_a": rng.uniform(-1, 1, size=(3, 1)),
        "attention.Q_a": rng.uniform(-1, 1, size=(3, 4)),
        "attention.b_a": rng.uniform(-1, 1, size=(1, 3)),
    }

    def value(p):
        w, g = market_attention(p["A"], p, debug_checks=True)
        return ops.concat_cols(ops.transpose(w), g)

    return params, _projected(value, (1, 9), rng)


MODEL_CASES: dict[str, ModelCase] = {
    "lstm_encode": _lstm_case,
    "curb_mlp": _mlp_case,
    "graph_convolve": _graph_case,
    "market_attention": _attention_case,
    "hgnn_full": _model_case(lambda: HgnnModel(preset="full", config=toy_config(), graph=toy_graph())),
    "hgnn_node_aggregand": _model_case(
        lambda: HgnnModel(preset="full", config=toy_config(market_aggregand="node"), graph=toy_graph())
    ),
    "hgnn_M": _model_case(lambda: HgnnModel(preset="M", config=toy_config(enabled_views=["node", "market"]), graph=toy_graph())),
    "logreg": _model_case(lambda: LogRegModel(lookback=5, n_features=6, n_indicators=5)),
    "lstm": _model_case(lambda: LstmModel(n_features=6, hidden=4)),
    "gcn": _model_case(lambda: GcnModel(n_features=6, hidden=4, graph=toy_graph())),
}


def run_model_suite(
    seeds: Iterable[int],
    step: float = 1e-5,
    tolerance: float = 1e-4,
) -> list[GradCheckReport]:
    """
    Gradient checks of every model layer and the end-to-end forward passes
    (4 stocks, 2 industries, T=5, U=4, V=3).
    """
    reports = []
    for seed in seeds:
        for name, case in MODEL_CASES.items():
            rng = np.random.default_rng(seed)
            params, closure = case(rng)
            reports.append(grad_check(closure, params, step=step, tolerance=tolerance, label=f"{name}[seed={seed}]"))
    logger.info(f"model suite: {sum(r.passed for r in reports)}/{len(reports)} checks passed")
    return reports
