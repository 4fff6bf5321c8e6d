from abc import ABC, abstractmethod
from typing import Mapping

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.diffcore import DiffArray, Tape
from src.market.windows import DaySample
from .params import HgnnParams, Shapes, init_params


class DayOutput(BaseModel):
    """
    Forward result for one trading day.

    Attributes:
        logits: m x 1 logits aligned with the day's curb nodes
        attention: n market-attention weights, None when the model has no market view
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    logits: DiffArray
    attention: np.ndarray | None = None


class DayModel(BaseModel, ABC):
    """
    A classifier of one day's curb stocks.

    Every model consumes a whole DaySample so the training loop, metrics
    and checkpoints are shared across the hierarchical model and baselines.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    kind: str = Field(..., description="Model family tag")
    preset: str = Field(default="default", description="Ablation preset or variant name")

    @abstractmethod
    def parameter_shapes(self) -> Shapes:
        ...

    @abstractmethod
    def forward(self, day: DaySample, p: Mapping[str, DiffArray]) -> DayOutput:
        ...

    @abstractmethod
    def describe(self) -> dict:
        """JSON-serializable settings, stored in checkpoints and fingerprints."""

    def init_params(self, seed: int) -> HgnnParams:
        return init_params(self.parameter_shapes(), seed)

    def predict(self, day: DaySample, params: HgnnParams) -> DayOutput:
        """Forward pass with parameters as constants (no gradient bookkeeping)."""
        constants = {name: DiffArray.constant(value) for name, value in params.values.items()}
        return self.forward(day, constants)

    def tape_forward(self, day: DaySample, params: HgnnParams) -> tuple[Tape, DayOutput]:
        tape = Tape()
        return tape, self.forward(day, tape.parameters(params.values))
