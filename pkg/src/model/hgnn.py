"""
The hierarchical graph model: LSTM history encoder, curb-feature MLP,
node-state fusion, graph convolution over the industry graph, market
attention and the hierarchical fusion classifier.

All node-level work is batched row-wise: row k of every n x U matrix is the
stock at graph node k.
"""

import logging
from typing import Mapping, Sequence

import numpy as np
from pydantic import Field

from src.core.errors import ContractError, ShapeError
from src.diffcore import DiffArray, ops
from src.industry import IndustryGraph
from src.market.windows import DaySample
from .base import DayModel, DayOutput
from .config import HgnnConfig, View
from .params import Shapes, hgnn_shapes

logger = logging.getLogger(__name__)

ATTENTION_TOLERANCE = 1e-12

Params = Mapping[str, DiffArray]


def _gate(x: DiffArray, h: DiffArray, p: Params, gate: str) -> DiffArray:
    pre = ops.matmul(x, ops.transpose(p[f"lstm.{gate}.P"]))
    pre = ops.add(pre, ops.matmul(h, ops.transpose(p[f"lstm.{gate}.Q"])))
    return ops.add(pre, p[f"lstm.{gate}.b"])


def lstm_encode(windows: np.ndarray, p: Params) -> DiffArray:
    """
    Runs the LSTM over each row's window and returns the last hidden state.

    Args:
        windows: n x T x F windows, or a single T x F window
        p: Parameters with the `lstm.*` entries

    Returns:
        n x U hidden states (1 x U for a single window)
    """

    x = np.asarray(windows, dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
    if x.ndim != 3:
        raise ShapeError(f"lstm_encode needs n x T x F windows, got shape {x.shape}")
    n, steps, n_features = x.shape
    hidden, expected_features = p["lstm.u.P"].shape
    if n_features != expected_features:
        raise ShapeError(f"Windows have {n_features} features, LSTM expects {expected_features}")

    h = DiffArray.constant(np.zeros((n, hidden)))
    c = DiffArray.constant(np.zeros((n, hidden)))
    for t in range(steps):
        x_t = DiffArray.constant(x[:, t, :])
        i = ops.sigmoid(_gate(x_t, h, p, "i"))
        r = ops.sigmoid(_gate(x_t, h, p, "r"))
        o = ops.sigmoid(_gate(x_t, h, p, "o"))
        u = ops.tanh(_gate(x_t, h, p, "u"))
        c = ops.add(ops.hadamard(r, c), ops.hadamard(i, u))
        h = ops.hadamard(o, ops.tanh(c))
    return h


def curb_mlp(indicators: np.ndarray | DiffArray, p: Params) -> DiffArray:
    """Affine + LeakyReLU per hidden layer, affine output layer of width U."""
    z = indicators if isinstance(indicators, DiffArray) else DiffArray.constant(indicators)
    n_layers = sum(1 for name in p if name.startswith("mlp.") and name.endswith(".W"))
    if n_layers == 0:
        raise ContractError("curb_mlp needs at least one mlp.<k>.W parameter")
    for k in range(n_layers):
        z = ops.add(ops.matmul(z, p[f"mlp.{k}.W"]), p[f"mlp.{k}.b"])
        if k < n_layers - 1:
            z = ops.leaky_relu(z)
    return z


def fuse_node_state(h: DiffArray, l: DiffArray | None, curb_nodes: Sequence[int] | np.ndarray, p: Params) -> DiffArray:
    """
    Node states E: tanh([h, l] W_f + b_f) on curb rows, h unchanged elsewhere.

    Args:
        h: n x U hidden states
        l: m x U curb features aligned with curb_nodes, None for no curb stocks
        curb_nodes: Node indices of the curb stocks
        p: Parameters with `fusion.W_f` and `fusion.b_f`
    """

    nodes = np.asarray(curb_nodes, dtype=np.int64).reshape(-1)
    if l is None or nodes.size == 0:
        return h
    if l.rows != nodes.size:
        raise ShapeError(f"{l.rows} curb feature rows for {nodes.size} curb nodes")
    h_curb = ops.gather_rows(h, nodes)
    fused = ops.tanh(ops.add(ops.matmul(ops.concat_cols(h_curb, l), p["fusion.W_f"]), p["fusion.b_f"]))
    return ops.add(h, ops.scatter_add_rows(ops.sub(fused, h_curb), nodes, h.rows))


def graph_convolve(E: DiffArray, graph: IndustryGraph, pi: DiffArray | None = None) -> DiffArray:
    """
    a_s = sum over j in N(s) and s itself of (pi e_j) / sqrt(deg(j) deg(s)).

    Computed sparsely as gather, scale, scatter-add over the graph's message
    arrays, then the pi transform on the right (rows are e_j transposed).
    """
    if E.rows != graph.node_count:
        raise ShapeError(f"Node states have {E.rows} rows, graph has {graph.node_count} nodes")
    src, dst, coef = graph.message_arrays
    messages = ops.hadamard(ops.gather_rows(E, src), DiffArray.constant(coef.reshape(-1, 1)))
    aggregated = ops.scatter_add_rows(messages, dst, graph.node_count)
    if pi is None:
        return aggregated
    return ops.matmul(aggregated, ops.transpose(pi))


def market_attention(A: DiffArray, p: Params, debug_checks: bool = False) -> tuple[DiffArray, DiffArray]:
    """
    Softmax attention over all n stocks.

    Returns:
        (w, g): n x 1 weights and the 1 x U weighted sum of the rows of A
    """
    scores = ops.tanh(ops.add(ops.matmul(A, ops.transpose(p["attention.Q_a"])), p["attention.b_a"]))
    logits = ops.matmul(scores, p["attention.P_a"])
    w = ops.softmax_vec(logits)
    g = ops.matmul(ops.transpose(w), A)
    if debug_checks:
        total = float(w.value.sum())
        if abs(total - 1.0) > ATTENTION_TOLERANCE:
            raise ContractError(f"Attention weights sum to {total!r}")
    return w, g


def hierarchical_fuse(e: DiffArray, a: DiffArray | None, g: DiffArray | None, enabled_views: Sequence[View]) -> DiffArray:
    """
    Concatenates the enabled views in the order node, relation, market.

    e and a are m x U (one row per curb stock); g is the 1 x U market state
    repeated on every row.
    """
    parts = [e]
    if View.RELATION in enabled_views:
        if a is None:
            raise ContractError("Relation view enabled without relation states")
        parts.append(a)
    if View.MARKET in enabled_views:
        if g is None:
            raise ContractError("Market view enabled without a market state")
        ones = DiffArray.constant(np.ones((e.rows, 1)))
        parts.append(ops.matmul(ones, g))
    return ops.concat_cols(*parts) if len(parts) > 1 else e


def classify(H: DiffArray, p: Params) -> DiffArray:
    """Logits H Q + b; a stock is predicted Type I iff its logit >= 0."""
    Q = p["classifier.Q"]
    if H.cols != Q.rows:
        raise ShapeError(f"Classifier expects width {Q.rows}, got {H.cols}")
    return ops.add(ops.matmul(H, Q), p["classifier.b"])


def history_mask(day: DaySample) -> DiffArray:
    return DiffArray.constant(day.has_history.astype(np.float64).reshape(-1, 1))


class HgnnModel(DayModel):
    """
    The hierarchical model for one ablation preset.

    With only the node view enabled the graph is never read, so `graph`
    may be None.
    """

    kind: str = "hgnn"
    config: HgnnConfig = Field(default_factory=HgnnConfig)
    graph: IndustryGraph | None = Field(default=None, exclude=True)

    def parameter_shapes(self) -> Shapes:
        return hgnn_shapes(self.config)

    def describe(self) -> dict:
        return {"kind": self.kind, "preset": self.preset, "hgnn": self.config.model_dump(mode="json")}

    def _require_graph(self) -> IndustryGraph:
        if self.graph is None:
            raise ContractError(f"Views {[v.value for v in self.config.enabled_views]} need an industry graph")
        return self.graph

    def forward(self, day: DaySample, p: Params) -> DayOutput:
        config = self.config
        missing = int((~day.has_history).sum())
        if missing:
            logger.debug(f"Day {day.day}: {missing} stocks without history use zero node states")

        h = ops.hadamard(lstm_encode(day.features, p), history_mask(day))
        if config.curb_mlp:
            l = curb_mlp(day.indicators, p) if day.n_curb else None
            E = fuse_node_state(h, l, day.curb_nodes, p)
        else:
            E = h

        A = None
        if config.has(View.RELATION):
            A = graph_convolve(E, self._require_graph(), p["graph.pi"])

        g = None
        weights = None
        if config.has(View.MARKET):
            pooled = A if (A is not None and config.market_aggregand == "relation") else E
            w, g = market_attention(pooled, p, debug_checks=config.debug_checks)
            weights = w.value.reshape(-1).copy()

        nodes = day.curb_nodes
        e = ops.gather_rows(E, nodes)
        a = ops.gather_rows(A, nodes) if A is not None else None
        H = hierarchical_fuse(e, a, g, config.enabled_views)
        return DayOutput(logits=classify(H, p), attention=weights)
