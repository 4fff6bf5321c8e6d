"""
Differentiable operations on `DiffArray`.

Broadcasting is limited to the row-vector (1 x c) and column-vector (r x 1)
cases the models need: the second operand of `add`, `sub` and `hadamard`
may be a row or column vector stretched over the first.
"""

from __future__ import annotations

from typing import Literal, Sequence

import numpy as np

from src.core.errors import ContractError, IndexRangeError, ShapeError
from .tape import Adjoint, DiffArray, Tape

LEAKY_RELU_SLOPE = 0.01

Activation = Literal["sigmoid", "tanh", "leaky_relu"]


def _tape_of(*operands: DiffArray) -> Tape | None:
    for operand in operands:
        if operand.tape is not None:
            return operand.tape
    return None


def _emit(op: str, operands: Sequence[DiffArray], value: np.ndarray, adjoint: Adjoint) -> DiffArray:
    tape = _tape_of(*operands)
    if tape is None:
        return DiffArray(value)
    return tape.record(op, operands, value, adjoint)


def _broadcast_shape(op: str, a: DiffArray, b: DiffArray) -> None:
    ar, ac = a.shape
    br, bc = b.shape
    if (br, bc) == (ar, ac):
        return
    if br == 1 and bc == ac:
        return
    if bc == 1 and br == ar:
        return
    if (br, bc) == (1, 1):
        return
    raise ShapeError(f"{op}: cannot combine shapes {a.shape} and {b.shape}")


def _unbroadcast(grad: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    rows, cols = shape
    out = grad
    if rows == 1 and out.shape[0] != 1:
        out = out.sum(axis=0, keepdims=True)
    if cols == 1 and out.shape[1] != 1:
        out = out.sum(axis=1, keepdims=True)
    return out


def matmul(a: DiffArray, b: DiffArray) -> DiffArray:
    """Matrix product; adjoints g @ b.T and a.T @ g."""
    if a.cols != b.rows:
        raise ShapeError(f"matmul: inner dimensions disagree for shapes {a.shape} and {b.shape}")
    av, bv = a.value, b.value

    def adjoint(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return g @ bv.T, av.T @ g

    return _emit("matmul", (a, b), av @ bv, adjoint)


def add(a: DiffArray, b: DiffArray) -> DiffArray:
    _broadcast_shape("add", a, b)
    shape_b = b.shape

    def adjoint(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return g, _unbroadcast(g, shape_b)

    return _emit("add", (a, b), a.value + b.value, adjoint)


def sub(a: DiffArray, b: DiffArray) -> DiffArray:
    _broadcast_shape("sub", a, b)
    shape_b = b.shape

    def adjoint(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return g, -_unbroadcast(g, shape_b)

    return _emit("sub", (a, b), a.value - b.value, adjoint)


def hadamard(a: DiffArray, b: DiffArray) -> DiffArray:
    """Elementwise product, b may be a row or column vector."""
    _broadcast_shape("hadamard", a, b)
    av, bv = a.value, b.value
    shape_b = b.shape

    def adjoint(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return g * bv, _unbroadcast(g * av, shape_b)

    return _emit("hadamard", (a, b), av * bv, adjoint)


def scale(a: DiffArray, factor: float) -> DiffArray:
    factor = float(factor)

    def adjoint(g: np.ndarray) -> tuple[np.ndarray]:
        return (g * factor,)

    return _emit("scale", (a,), a.value * factor, adjoint)


def transpose(a: DiffArray) -> DiffArray:
    def adjoint(g: np.ndarray) -> tuple[np.ndarray]:
        return (g.T,)

    return _emit("transpose", (a,), a.value.T.copy(), adjoint)


def sigmoid(a: DiffArray) -> DiffArray:
    # tanh form avoids overflow in exp for large |x|
    y = 0.5 * (1.0 + np.tanh(0.5 * a.value))

    def adjoint(g: np.ndarray) -> tuple[np.ndarray]:
        return (g * y * (1.0 - y),)

    return _emit("sigmoid", (a,), y, adjoint)


def tanh(a: DiffArray) -> DiffArray:
    y = np.tanh(a.value)

    def adjoint(g: np.ndarray) -> tuple[np.ndarray]:
        return (g * (1.0 - y * y),)

    return _emit("tanh", (a,), y, adjoint)


def leaky_relu(a: DiffArray, slope: float = LEAKY_RELU_SLOPE) -> DiffArray:
    x = a.value
    positive = x > 0
    y = np.where(positive, x, slope * x)

    def adjoint(g: np.ndarray) -> tuple[np.ndarray]:
        return (np.where(positive, g, slope * g),)

    return _emit("leaky_relu", (a,), y, adjoint)


_ACTIVATIONS = {"sigmoid": sigmoid, "tanh": tanh, "leaky_relu": leaky_relu}


def elementwise(a: DiffArray, kind: Activation) -> DiffArray:
    try:
        fn = _ACTIVATIONS[kind]
    except KeyError:
        raise ContractError(f"Unknown elementwise kind '{kind}', expected one of {sorted(_ACTIVATIONS)}")
    return fn(a)


def concat_cols(*arrays: DiffArray) -> DiffArray:
    """Side-by-side concatenation; the vector concatenation of the model equations."""
    if not arrays:
        raise ContractError("concat_cols needs at least one operand")
    rows = arrays[0].rows
    for arr in arrays[1:]:
        if arr.rows != rows:
            raise ShapeError(f"concat_cols: row counts disagree: {[x.shape for x in arrays]}")
    bounds = np.cumsum([0] + [arr.cols for arr in arrays])

    def adjoint(g: np.ndarray) -> list[np.ndarray]:
        return [g[:, bounds[i]:bounds[i + 1]] for i in range(len(arrays))]

    return _emit("concat_cols", arrays, np.concatenate([arr.value for arr in arrays], axis=1), adjoint)


def concat_rows(*arrays: DiffArray) -> DiffArray:
    if not arrays:
        raise ContractError("concat_rows needs at least one operand")
    cols = arrays[0].cols
    for arr in arrays[1:]:
        if arr.cols != cols:
            raise ShapeError(f"concat_rows: column counts disagree: {[x.shape for x in arrays]}")
    bounds = np.cumsum([0] + [arr.rows for arr in arrays])

    def adjoint(g: np.ndarray) -> list[np.ndarray]:
        return [g[bounds[i]:bounds[i + 1], :] for i in range(len(arrays))]

    return _emit("concat_rows", arrays, np.concatenate([arr.value for arr in arrays], axis=0), adjoint)


def reduce_sum(a: DiffArray, axis: int | None = None) -> DiffArray:
    """Sum of all entries (1x1), of each column (axis=0, 1xc) or of each row (axis=1, rx1)."""
    if axis not in (None, 0, 1):
        raise ContractError(f"reduce_sum axis must be None, 0 or 1, got {axis}")
    shape = a.shape
    value = a.value.sum(keepdims=True) if axis is None else a.value.sum(axis=axis, keepdims=True)

    def adjoint(g: np.ndarray) -> tuple[np.ndarray]:
        return (np.broadcast_to(g, shape).copy(),)

    return _emit("reduce_sum", (a,), value, adjoint)


def mean_rows(a: DiffArray) -> DiffArray:
    return scale(reduce_sum(a, axis=0), 1.0 / a.rows)


def softmax_vec(a: DiffArray) -> DiffArray:
    """
    Softmax over a 1 x n or n x 1 vector, keeping its orientation.

    The max logit is subtracted before exponentiation.
    """
    if a.rows != 1 and a.cols != 1:
        raise ShapeError(f"softmax_vec needs a vector, got shape {a.shape}")
    z = a.value - a.value.max()
    e = np.exp(z)
    y = e / e.sum()

    def adjoint(g: np.ndarray) -> tuple[np.ndarray]:
        return (y * (g - float((g * y).sum())),)

    return _emit("softmax_vec", (a,), y, adjoint)


def _check_ids(ids: Sequence[int] | np.ndarray, n: int, op: str) -> np.ndarray:
    idx = np.asarray(ids, dtype=np.int64).reshape(-1)
    if idx.size == 0:
        raise ContractError(f"{op} needs at least one index")
    if idx.min() < 0 or idx.max() >= n:
        bad = idx[(idx < 0) | (idx >= n)]
        raise IndexRangeError(f"{op}: indices {bad.tolist()} outside [0, {n})")
    return idx


def gather_rows(a: DiffArray, ids: Sequence[int] | np.ndarray) -> DiffArray:
    """Selects rows in the given order; the adjoint sums duplicates back into source rows."""
    idx = _check_ids(ids, a.rows, "gather_rows")
    shape = a.shape

    def adjoint(g: np.ndarray) -> tuple[np.ndarray]:
        out = np.zeros(shape)
        np.add.at(out, idx, g)
        return (out,)

    return _emit("gather_rows", (a,), a.value[idx], adjoint)


def scatter_add_rows(a: DiffArray, ids: Sequence[int] | np.ndarray, n_rows: int) -> DiffArray:
    """Adds row k of `a` into output row ids[k] of an n_rows x cols zero array."""
    idx = _check_ids(ids, n_rows, "scatter_add_rows")
    if idx.size != a.rows:
        raise ShapeError(f"scatter_add_rows: {idx.size} ids for {a.rows} rows")
    out = np.zeros((n_rows, a.cols))
    np.add.at(out, idx, a.value)

    def adjoint(g: np.ndarray) -> tuple[np.ndarray]:
        return (g[idx],)

    return _emit("scatter_add_rows", (a,), out, adjoint)


def bce_with_logits(logits: DiffArray, labels: Sequence[int] | np.ndarray) -> DiffArray:
    """
    Mean binary cross-entropy of an r x 1 logit column against {0,1} labels.

    Uses max(z,0) - z*y + log(1 + exp(-|z|)).
    """
    y = np.asarray(labels, dtype=np.float64).reshape(-1, 1)
    if logits.cols != 1 or logits.rows != y.shape[0]:
        raise ShapeError(f"bce_with_logits: logits {logits.shape} vs {y.shape[0]} labels")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ContractError(f"Labels must be 0 or 1, got {sorted(set(y.ravel().tolist()))}")
    z = logits.value
    per_sample = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
    count = z.shape[0]
    prob = 0.5 * (1.0 + np.tanh(0.5 * z))

    def adjoint(g: np.ndarray) -> tuple[np.ndarray]:
        return (g[0, 0] * (prob - y) / count,)

    return _emit("bce_with_logits", (logits,), per_sample.mean(keepdims=True), adjoint)


def custom(op: str, operands: Sequence[DiffArray], value: np.ndarray, adjoint: Adjoint) -> DiffArray:
    """Records an operation with a caller-supplied forward value and adjoint."""
    return _emit(op, operands, np.asarray(value, dtype=np.float64), adjoint)
