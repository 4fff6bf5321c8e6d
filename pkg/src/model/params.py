"""
Named parameter stores and their initialization.

Names follow `<block>.<part>`: `lstm.{i,r,o,u}.{P,Q,b}` for the gates (r is
the forget gate) and candidate, `mlp.<k>.{W,b}`, `fusion.{W_f,b_f}`,
`graph.pi`, `attention.{P_a,Q_a,b_a}` and `classifier.{Q,b}`.
"""

from typing import Mapping

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.core.errors import ShapeError
from .config import HgnnConfig, View

Shapes = dict[str, tuple[int, int]]

LSTM_GATES = ("i", "r", "o", "u")


def is_bias(name: str) -> bool:
    return name.rsplit(".", 1)[-1] in {"b", "b_f", "b_a"}


def lstm_shapes(n_features: int, hidden: int) -> Shapes:
    shapes: Shapes = {}
    for gate in LSTM_GATES:
        shapes[f"lstm.{gate}.P"] = (hidden, n_features)
        shapes[f"lstm.{gate}.Q"] = (hidden, hidden)
        shapes[f"lstm.{gate}.b"] = (1, hidden)
    return shapes


def hgnn_shapes(config: HgnnConfig) -> Shapes:
    """Parameter shapes of the hierarchical model; disabled blocks have no parameters."""
    U = config.hidden
    shapes = lstm_shapes(config.n_features, U)

    if config.curb_mlp:
        widths = [config.n_indicators, *config.mlp_hidden_dims, U]
        for k, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
            shapes[f"mlp.{k}.W"] = (fan_in, fan_out)
            shapes[f"mlp.{k}.b"] = (1, fan_out)
        shapes["fusion.W_f"] = (2 * U, U)
        shapes["fusion.b_f"] = (1, U)

    if config.has(View.RELATION):
        shapes["graph.pi"] = (U, U)

    if config.has(View.MARKET):
        V = config.attention_dim
        shapes["attention.P_a"] = (V, 1)
        shapes["attention.Q_a"] = (V, U)
        shapes["attention.b_a"] = (1, V)

    shapes["classifier.Q"] = (config.n_views * U, 1)
    shapes["classifier.b"] = (1, 1)
    return shapes


def glorot_bound(shape: tuple[int, int]) -> float:
    return float(np.sqrt(6.0 / (shape[0] + shape[1])))


class HgnnParams(BaseModel):
    """
    Named parameter arrays of one model.

    Attributes:
        values: name -> 2-D float64 array, in initialization order
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    values: dict[str, np.ndarray] = Field(default_factory=dict)

    @property
    def n_params(self) -> int:
        return int(sum(v.size for v in self.values.values()))

    @property
    def shapes(self) -> Shapes:
        return {name: v.shape for name, v in self.values.items()}  # type: ignore[misc]

    def copy(self) -> "HgnnParams":
        return HgnnParams(values={name: v.copy() for name, v in self.values.items()})

    def is_finite(self) -> bool:
        return all(bool(np.all(np.isfinite(v))) for v in self.values.values())

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[name]

    def check_shapes(self, expected: Mapping[str, tuple[int, int]]) -> None:
        if set(expected) != set(self.values):
            raise ShapeError(f"Parameter names differ: expected {sorted(expected)}, got {sorted(self.values)}")
        for name, shape in expected.items():
            if self.values[name].shape != tuple(shape):
                raise ShapeError(f"Parameter '{name}' has shape {self.values[name].shape}, expected {tuple(shape)}")


def init_params(shapes: Mapping[str, tuple[int, int]], seed: int) -> HgnnParams:
    """
    Weights uniform in +-sqrt(6 / (rows + cols)), biases zero.

    Draws happen in the insertion order of `shapes` from one generator, so
    two models sharing a prefix of parameter names get identical values
    for that prefix.
    """
    rng = np.random.default_rng(seed)
    values: dict[str, np.ndarray] = {}
    for name, shape in shapes.items():
        if is_bias(name):
            values[name] = np.zeros(shape)
        else:
            bound = glorot_bound(shape)
            values[name] = rng.uniform(-bound, bound, size=shape)
    return HgnnParams(values=values)
