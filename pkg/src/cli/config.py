from pathlib import Path
from typing import Self

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.core.io import atomic_write_text, canonical_fingerprint
from src.market.corpus import DataConfig
from src.market.synthetic import SyntheticConfig
from src.model import DEFAULT_GRID, MODEL_KINDS, PRESETS, BaselineConfig, HgnnConfig
from src.training import TrainConfig


class PathsConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    data_dir: str = Field(default="data", description="Corpus directory")
    out_dir: str = Field(default="runs/latest", description="Run output directory")


class ExperimentConfig(BaseModel):
    """
    Everything a command needs besides its flags.

    Stored as JSON; unknown keys anywhere in the document are rejected.
    """

    model_config = ConfigDict(extra="forbid")

    synthetic: SyntheticConfig = Field(default_factory=SyntheticConfig, description="Generator settings")
    data: DataConfig = Field(default_factory=DataConfig, description="Windowing and split settings")
    hgnn: HgnnConfig = Field(default_factory=HgnnConfig, description="Hierarchical model settings")
    baseline: BaselineConfig = Field(default_factory=BaselineConfig, description="Baseline settings")
    train: TrainConfig = Field(default_factory=TrainConfig, description="Optimizer and schedule")
    paths: PathsConfig = Field(default_factory=PathsConfig, description="Data and output locations")
    grid: list[tuple[str, str]] = Field(
        default_factory=lambda: list(DEFAULT_GRID),
        description="(model kind, preset) pairs run by `ablate`",
    )

    @model_validator(mode="after")
    def _check(self) -> Self:
        if self.hgnn.lookback != self.data.lookback:
            raise ValueError(f"hgnn.lookback ({self.hgnn.lookback}) must equal data.lookback ({self.data.lookback})")
        if not self.grid:
            raise ValueError("grid must not be empty")
        for kind, preset in self.grid:
            if kind not in MODEL_KINDS:
                raise ValueError(f"Unknown model kind '{kind}' in grid, expected one of {MODEL_KINDS}")
            if kind == "hgnn" and preset != "default" and preset not in PRESETS:
                raise ValueError(f"Unknown preset '{preset}' in grid, expected one of {sorted(PRESETS)}")
        if len(set(self.grid)) != len(self.grid):
            raise ValueError("grid lists a (model, preset) pair twice")
        return self

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        return cls.model_validate_json(Path(path).read_text(encoding="utf-8"))

    def to_file(self, path: str | Path) -> Path:
        return atomic_write_text(path, self.model_dump_json(indent=2) + "\n")

    def fingerprint(self) -> str:
        return canonical_fingerprint(self.model_dump(mode="json"))
