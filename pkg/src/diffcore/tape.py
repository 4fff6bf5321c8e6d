"""
Define-by-run tape for reverse-mode differentiation over 2-D float64 arrays.

Every operation on a `DiffArray` that has a tape appends one record; the
record keeps the operand ids, the output id and a closure mapping the output
adjoint to the operand adjoints. `Tape.backward` walks the records once in
reverse order.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from src.core.errors import ContractError, ShapeError

Adjoint = Callable[[np.ndarray], Sequence[np.ndarray | None]]


def as_matrix(value: object) -> np.ndarray:
    """Coerces scalars and 1-D data into a 2-D float64 array (1-D becomes a row)."""
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        return arr.reshape(1, 1)
    if arr.ndim == 1:
        return arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ShapeError(f"DiffArray holds rank-2 data only, got shape {arr.shape}")
    return arr


class DiffArray:
    """
    A dense 2-D double-precision array that may participate in a recorded computation.

    Attributes:
        value: The forward value, a C-contiguous float64 ndarray
        node_id: Index of this array on its tape, None for constants
        tape: The owning tape, None for constants
    """

    __slots__ = ("value", "node_id", "tape")
    __array_priority__ = 1000

    def __init__(self, value: object, node_id: int | None = None, tape: "Tape | None" = None):
        arr = as_matrix(value)
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ShapeError(f"DiffArray needs positive rows and cols, got shape {arr.shape}")
        self.value = np.ascontiguousarray(arr)
        self.node_id = node_id
        self.tape = tape

    @classmethod
    def constant(cls, value: object) -> "DiffArray":
        return cls(value)

    @property
    def rows(self) -> int:
        return self.value.shape[0]

    @property
    def cols(self) -> int:
        return self.value.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape  # type: ignore[return-value]

    @property
    def is_constant(self) -> bool:
        return self.node_id is None

    def item(self) -> float:
        if self.shape != (1, 1):
            raise ShapeError(f"item() needs a 1x1 array, got {self.shape}")
        return float(self.value[0, 0])

    def __repr__(self) -> str:
        kind = "const" if self.is_constant else f"node={self.node_id}"
        return f"DiffArray(shape={self.shape}, {kind})"

    # Operator sugar; the implementations live in ops.
    def __add__(self, other: "DiffArray") -> "DiffArray":
        from . import ops
        return ops.add(self, _lift(other))

    def __radd__(self, other: object) -> "DiffArray":
        from . import ops
        return ops.add(_lift(other), self)

    def __sub__(self, other: "DiffArray") -> "DiffArray":
        from . import ops
        return ops.sub(self, _lift(other))

    def __mul__(self, other: object) -> "DiffArray":
        from . import ops
        if isinstance(other, (int, float)):
            return ops.scale(self, float(other))
        return ops.hadamard(self, _lift(other))

    def __rmul__(self, other: object) -> "DiffArray":
        return self.__mul__(other)

    def __matmul__(self, other: "DiffArray") -> "DiffArray":
        from . import ops
        return ops.matmul(self, _lift(other))

    def __neg__(self) -> "DiffArray":
        from . import ops
        return ops.scale(self, -1.0)


def _lift(value: object) -> DiffArray:
    return value if isinstance(value, DiffArray) else DiffArray.constant(value)


class TapeRecord:
    __slots__ = ("op", "inputs", "output", "adjoint")

    def __init__(self, op: str, inputs: tuple[int | None, ...], output: int, adjoint: Adjoint):
        self.op = op
        self.inputs = inputs
        self.output = output
        self.adjoint = adjoint


class Tape:
    """
    An ordered list of recorded operations.

    Tapes are confined to a single thread; build a fresh tape for every
    forward pass.
    """

    def __init__(self) -> None:
        self._shapes: list[tuple[int, int]] = []
        self._records: list[TapeRecord] = []
        self._parameters: dict[str, int] = {}

    def __len__(self) -> int:
        return len(self._records)

    @property
    def records(self) -> tuple[TapeRecord, ...]:
        return tuple(self._records)

    @property
    def parameter_names(self) -> tuple[str, ...]:
        return tuple(self._parameters)

    def _new_node(self, value: np.ndarray) -> int:
        self._shapes.append(value.shape)  # type: ignore[arg-type]
        return len(self._shapes) - 1

    def parameter(self, name: str, value: object) -> DiffArray:
        """
        Registers a named leaf whose gradient `backward` reports.

        Raises:
            ContractError: If the name is already registered on this tape
        """
        if name in self._parameters:
            raise ContractError(f"Parameter '{name}' registered twice on one tape")
        arr = as_matrix(value).copy()
        node_id = self._new_node(arr)
        self._parameters[name] = node_id
        return DiffArray(arr, node_id=node_id, tape=self)

    def parameters(self, values: dict[str, np.ndarray]) -> dict[str, DiffArray]:
        return {name: self.parameter(name, arr) for name, arr in values.items()}

    def record(
        self,
        op: str,
        operands: Sequence[DiffArray],
        value: np.ndarray,
        adjoint: Adjoint,
    ) -> DiffArray:
        """
        Appends one operation. When no operand is on a tape the result is a constant.

        Args:
            op: Operation name, kept for diagnostics
            operands: The operand arrays in adjoint order
            value: The forward output
            adjoint: Maps the output adjoint to one adjoint (or None) per operand

        Returns:
            The output array
        """
        tapes = {id(o.tape): o.tape for o in operands if o.tape is not None}
        if not tapes:
            return DiffArray(value)
        if len(tapes) > 1 or next(iter(tapes.values())) is not self:
            raise ContractError(f"Operands of '{op}' belong to different tapes")

        output = DiffArray(value, tape=self)
        output.node_id = self._new_node(output.value)
        inputs = tuple(o.node_id for o in operands)
        self._records.append(TapeRecord(op, inputs, output.node_id, adjoint))
        return output

    def backward(self, loss: DiffArray) -> dict[str, np.ndarray]:
        """
        Computes dL/dp for every registered parameter.

        Adjoints are zeroed on every call, so replaying the same tape twice
        yields identical gradients.

        Args:
            loss: A 1x1 array recorded on this tape

        Returns:
            Mapping parameter name -> gradient with the parameter's shape

        Raises:
            ContractError: If the loss is not a scalar or not on this tape
        """
        if loss.shape != (1, 1):
            raise ContractError(f"backward needs a 1x1 loss, got shape {loss.shape}")

        adjoints: list[np.ndarray | None] = [None] * len(self._shapes)
        if loss.node_id is not None:
            if loss.tape is not self:
                raise ContractError("Loss was recorded on a different tape")
            adjoints[loss.node_id] = np.ones((1, 1))

            for record in reversed(self._records):
                g = adjoints[record.output]
                if g is None:
                    continue
                grads = record.adjoint(g)
                for node_id, grad in zip(record.inputs, grads):
                    if node_id is None or grad is None:
                        continue
                    current = adjoints[node_id]
                    adjoints[node_id] = grad.copy() if current is None else current + grad

        result: dict[str, np.ndarray] = {}
        for name, node_id in self._parameters.items():
            grad = adjoints[node_id]
            result[name] = np.zeros(self._shapes[node_id]) if grad is None else np.asarray(grad, dtype=np.float64)
        return result
