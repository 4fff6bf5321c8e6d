"""
JSON parameter checkpoints.

Floats are serialized with Python's shortest round-trip repr, so loading a
checkpoint reproduces every parameter bit-exactly.
"""

import json
import logging
from pathlib import Path

import numpy as np
from pydantic import BaseModel, Field

from src.core.errors import SchemaError
from src.core.io import atomic_write_text, canonical_fingerprint
from .params import HgnnParams

logger = logging.getLogger(__name__)


class ArrayPayload(BaseModel):
    shape: tuple[int, int]
    values: list[float]


class Checkpoint(BaseModel):
    """
    A trained model's parameters with enough context to rebuild the model.

    Attributes:
        kind: Model family tag
        preset: Ablation preset or variant
        model: Model settings as returned by DayModel.describe()
        fingerprint: Fingerprint of the experiment configuration
        seed: Training seed
        arrays: Parameter name -> shape and flattened row-major values
        best_val_f1: Validation F1 at the saved epoch
        epoch: Epoch the parameters were taken from
    """

    kind: str
    preset: str
    model: dict = Field(default_factory=dict)
    fingerprint: str = ""
    seed: int
    arrays: dict[str, ArrayPayload]
    best_val_f1: float = 0.0
    epoch: int = Field(default=0, ge=0)

    @classmethod
    def from_params(cls, params: HgnnParams, **fields) -> "Checkpoint":
        arrays = {
            name: ArrayPayload(shape=value.shape, values=[float(v) for v in value.ravel()])
            for name, value in params.values.items()
        }
        return cls(arrays=arrays, **fields)

    def params(self) -> HgnnParams:
        values = {}
        for name, payload in self.arrays.items():
            rows, cols = payload.shape
            if len(payload.values) != rows * cols:
                raise SchemaError(f"Checkpoint array '{name}' has {len(payload.values)} values for shape {payload.shape}")
            values[name] = np.array(payload.values, dtype=np.float64).reshape(rows, cols)
        return HgnnParams(values=values)

    @property
    def params_fingerprint(self) -> str:
        return canonical_fingerprint({name: a.model_dump() for name, a in self.arrays.items()})


def save_checkpoint(checkpoint: Checkpoint, path: str | Path) -> Path:
    payload = checkpoint.model_dump(mode="json")
    path = atomic_write_text(path, json.dumps(payload, sort_keys=True) + "\n")
    logger.info(f"Saved {checkpoint.kind}/{checkpoint.preset} checkpoint (seed {checkpoint.seed}) to {path}")
    return path


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"Missing checkpoint: {path}")
    try:
        return Checkpoint.model_validate_json(path.read_text(encoding="utf-8"))
    except ValueError as e:
        raise SchemaError(f"{path}: invalid checkpoint: {e}")
