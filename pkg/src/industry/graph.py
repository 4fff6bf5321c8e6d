"""
Industry relationship graph: one clique per industry, symmetric degree
normalization with self-loop-inclusive degrees.
"""

import logging
import math
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr

from src.core.errors import ContractError, IndexRangeError
from src.core.io import atomic_write_text

logger = logging.getLogger(__name__)


class IndustryGraph(BaseModel):
    """
    Immutable undirected industry graph.

    Attributes:
        stock_ids: Node index -> stock_id
        industries: Node index -> industry label
        neighbors: Sorted neighbor indices per node, self excluded
    """

    model_config = ConfigDict(frozen=True)

    stock_ids: tuple[str, ...] = Field(..., min_length=1)
    industries: tuple[str, ...]
    neighbors: tuple[tuple[int, ...], ...]

    _index: dict[str, int] = PrivateAttr(default_factory=dict)
    _src: np.ndarray = PrivateAttr()
    _dst: np.ndarray = PrivateAttr()
    _coef: np.ndarray = PrivateAttr()

    def model_post_init(self, __context: object) -> None:
        n = len(self.stock_ids)
        if len(self.industries) != n or len(self.neighbors) != n:
            raise ValueError(f"{n} stock ids but {len(self.industries)} industries, {len(self.neighbors)} neighbor lists")
        if len(set(self.stock_ids)) != n:
            raise ValueError("stock_ids must be unique")

        for s, adjacent in enumerate(self.neighbors):
            if len(set(adjacent)) != len(adjacent):
                raise ValueError(f"Duplicate edge at node {s}")
            for j in adjacent:
                if not 0 <= j < n or j == s:
                    raise ValueError(f"Invalid neighbor {j} of node {s}")
                if s not in self.neighbors[j]:
                    raise ValueError(f"Edge ({s}, {j}) is not symmetric")

        self._index = {stock_id: k for k, stock_id in enumerate(self.stock_ids)}
        degree = np.array([len(adjacent) + 1 for adjacent in self.neighbors], dtype=np.float64)
        dst = np.repeat(np.arange(n), [len(a) + 1 for a in self.neighbors])
        src = np.concatenate([np.array((s,) + adjacent, dtype=np.int64) for s, adjacent in enumerate(self.neighbors)])
        self._src = src
        self._dst = dst.astype(np.int64)
        self._coef = 1.0 / np.sqrt(degree[src] * degree[dst])

    @property
    def node_count(self) -> int:
        return len(self.stock_ids)

    @property
    def edge_count(self) -> int:
        return sum(len(a) for a in self.neighbors) // 2

    @property
    def message_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(src, dst, coef) over every j in N(s) plus s itself, coef = 1 / sqrt(deg(j) deg(s))."""
        return self._src, self._dst, self._coef

    def index_of(self, stock_id: str) -> int:
        try:
            return self._index[stock_id]
        except KeyError:
            raise IndexRangeError(f"Unknown stock '{stock_id}'")

    def degree(self, node: int) -> int:
        self._check_node(node)
        return len(self.neighbors[node]) + 1

    def _check_node(self, node: int) -> None:
        if not 0 <= node < self.node_count:
            raise IndexRangeError(f"Node {node} outside [0, {self.node_count})")

    def sym_norm_coefficient(self, j: int, s: int) -> float:
        """
        Returns r = sqrt(deg(j) * deg(s)) for j a neighbor of s or s itself.

        Raises:
            ContractError: j is neither s nor adjacent to s
        """
        self._check_node(j)
        self._check_node(s)
        if j != s and j not in self.neighbors[s]:
            raise ContractError(f"Node {j} is not adjacent to node {s}")
        return math.sqrt(self.degree(j) * self.degree(s))

    def to_dense_normalized(self) -> np.ndarray:
        """D^-1/2 (A + I) D^-1/2 as a dense n x n matrix."""
        n = self.node_count
        adjacency = np.eye(n)
        for s, adjacent in enumerate(self.neighbors):
            adjacency[s, list(adjacent)] = 1.0
        degree = adjacency.sum(axis=1)
        return np.where(adjacency > 0.0, 1.0 / np.sqrt(np.outer(degree, degree)), 0.0)

    def edges(self) -> list[tuple[str, str]]:
        """Undirected edges as (a, b) stock id pairs with a < b, lexicographically sorted."""
        pairs = set()
        for s, adjacent in enumerate(self.neighbors):
            for j in adjacent:
                a, b = sorted((self.stock_ids[s], self.stock_ids[j]))
                pairs.add((a, b))
        return sorted(pairs)

    def write_edge_list(self, path: str | Path) -> Path:
        text = "".join(f"{a},{b}\n" for a, b in self.edges())
        return atomic_write_text(path, text)

    def relabel(self, permutation: Sequence[int]) -> "IndustryGraph":
        """
        Graph with node k of the result being node permutation[k] of this graph.
        """
        perm = np.asarray(permutation, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(self.node_count)):
            raise ContractError("relabel needs a permutation of the node indices")
        new_index = np.empty_like(perm)
        new_index[perm] = np.arange(len(perm))
        return IndustryGraph(
            stock_ids=tuple(self.stock_ids[p] for p in perm),
            industries=tuple(self.industries[p] for p in perm),
            neighbors=tuple(tuple(sorted(int(new_index[j]) for j in self.neighbors[p])) for p in perm),
        )


def build_graph(industries: Mapping[str, str], stock_order: Sequence[str] | None = None) -> IndustryGraph:
    """
    Connects every pair of same-industry stocks.

    Args:
        industries: stock_id -> industry
        stock_order: Node order; defaults to sorted stock ids

    Returns:
        The IndustryGraph

    Raises:
        ContractError: Empty map or stock_order not covering the map
    """

    if not industries:
        raise ContractError("Cannot build an industry graph from an empty map")
    order = list(stock_order) if stock_order is not None else sorted(industries)
    if sorted(order) != sorted(industries):
        raise ContractError("stock_order must list every stock of the industry map exactly once")

    members: dict[str, list[int]] = {}
    for k, stock_id in enumerate(order):
        members.setdefault(industries[stock_id], []).append(k)

    neighbors = []
    for k, stock_id in enumerate(order):
        neighbors.append(tuple(j for j in members[industries[stock_id]] if j != k))

    graph = IndustryGraph(
        stock_ids=tuple(order),
        industries=tuple(industries[s] for s in order),
        neighbors=tuple(neighbors),
    )
    singletons = sum(1 for group in members.values() if len(group) == 1)
    logger.info(
        f"Built industry graph: {graph.node_count} stocks, {len(members)} industries, "
        f"{graph.edge_count} edges, {singletons} isolated"
    )
    return graph
