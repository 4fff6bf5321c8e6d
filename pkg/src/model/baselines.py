"""Reference classifiers built from the same primitives as the hierarchical model."""

from typing import Literal, Mapping

import numpy as np
from pydantic import Field

from src.core.errors import ContractError, ShapeError
from src.diffcore import DiffArray, ops
from src.industry import IndustryGraph
from src.market.windows import DaySample
from .base import DayModel, DayOutput
from .hgnn import classify, graph_convolve, history_mask, lstm_encode
from .params import Shapes, lstm_shapes

BaselineKind = Literal["logreg", "lstm", "gcn"]
BASELINE_KINDS: tuple[str, ...] = ("logreg", "lstm", "gcn")

Params = Mapping[str, DiffArray]


def logreg_inputs(day: DaySample) -> np.ndarray:
    """Flattened T x F windows of the curb stocks followed by their indicators."""
    windows = day.features[day.curb_nodes]
    return np.concatenate([windows.reshape(len(day.curb_nodes), -1), day.indicators], axis=1)


def logreg_forward(x: np.ndarray | DiffArray, p: Params) -> DiffArray:
    x = x if isinstance(x, DiffArray) else DiffArray.constant(x)
    return classify(x, p)


def lstm_classifier_forward(windows: np.ndarray, p: Params, mask: DiffArray | None = None) -> DiffArray:
    """Last LSTM hidden state followed by the affine head, one logit per window."""
    h = lstm_encode(windows, p)
    if mask is not None:
        h = ops.hadamard(h, mask)
    return classify(h, p)


def gcn_classifier_forward(day: DaySample, graph: IndustryGraph, p: Params) -> DiffArray:
    """LSTM node states, one tanh graph-convolution layer, affine head per curb node."""
    h = ops.hadamard(lstm_encode(day.features, p), history_mask(day))
    A = ops.tanh(graph_convolve(h, graph, p["graph.pi"]))
    return classify(ops.gather_rows(A, day.curb_nodes), p)


class LogRegModel(DayModel):
    kind: str = "logreg"
    lookback: int = Field(default=10, ge=1)
    n_features: int = Field(default=6, ge=1)
    n_indicators: int = Field(default=5, ge=1)

    def parameter_shapes(self) -> Shapes:
        return {"classifier.Q": (self.lookback * self.n_features + self.n_indicators, 1), "classifier.b": (1, 1)}

    def describe(self) -> dict:
        return self.model_dump(mode="json")

    def forward(self, day: DaySample, p: Params) -> DayOutput:
        x = logreg_inputs(day)
        if x.shape[1] != p["classifier.Q"].rows:
            raise ShapeError(f"Logistic regression expects {p['classifier.Q'].rows} inputs, got {x.shape[1]}")
        return DayOutput(logits=logreg_forward(x, p))


class LstmModel(DayModel):
    kind: str = "lstm"
    n_features: int = Field(default=6, ge=1)
    hidden: int = Field(default=16, ge=1)

    def parameter_shapes(self) -> Shapes:
        shapes = lstm_shapes(self.n_features, self.hidden)
        shapes["classifier.Q"] = (self.hidden, 1)
        shapes["classifier.b"] = (1, 1)
        return shapes

    def describe(self) -> dict:
        return self.model_dump(mode="json")

    def forward(self, day: DaySample, p: Params) -> DayOutput:
        windows = day.features[day.curb_nodes]
        return DayOutput(logits=lstm_classifier_forward(windows, p))


class GcnModel(DayModel):
    kind: str = "gcn"
    n_features: int = Field(default=6, ge=1)
    hidden: int = Field(default=16, ge=1)
    graph: IndustryGraph | None = Field(default=None, exclude=True)

    def parameter_shapes(self) -> Shapes:
        shapes = lstm_shapes(self.n_features, self.hidden)
        shapes["graph.pi"] = (self.hidden, self.hidden)
        shapes["classifier.Q"] = (self.hidden, 1)
        shapes["classifier.b"] = (1, 1)
        return shapes

    def describe(self) -> dict:
        return self.model_dump(mode="json")

    def forward(self, day: DaySample, p: Params) -> DayOutput:
        if self.graph is None:
            raise ContractError("The gcn baseline needs an industry graph")
        return DayOutput(logits=gcn_classifier_forward(day, self.graph, p))
