from enum import Enum
from typing import Literal, Self

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class View(str, Enum):
    NODE = "node"
    RELATION = "relation"
    MARKET = "market"


VIEW_ORDER = (View.NODE, View.RELATION, View.MARKET)

PRESETS: dict[str, tuple[View, ...]] = {
    "node": (View.NODE,),
    "relation": (View.NODE, View.RELATION),
    "full": (View.NODE, View.RELATION, View.MARKET),
    "I": (View.NODE, View.RELATION, View.MARKET),
    "M": (View.NODE, View.MARKET),
}


class HgnnConfig(BaseModel):
    """
    Architecture settings of the hierarchical graph model.

    `lookback`, `n_features` and `n_indicators` describe the data and are
    shared with the baselines.
    """

    model_config = ConfigDict(extra="forbid")

    lookback: int = Field(default=10, ge=1, description="T, days per window")
    n_features: int = Field(default=6, ge=1, description="F, daily features per day")
    n_indicators: int = Field(default=5, ge=1, description="Curb indicators per curb stock")
    hidden: int = Field(default=16, ge=1, description="U, LSTM memory cells and view width")
    attention_dim: int = Field(default=8, ge=1, description="V, attention hidden width")
    mlp_hidden_dims: list[int] = Field(default_factory=lambda: [16], description="Hidden widths of the curb-feature MLP")
    fusion_activation: Literal["tanh"] = Field(default="tanh", description="Activation of the node-state fusion")
    attention_activation: Literal["tanh"] = Field(default="tanh", description="Activation inside the attention scorer")
    enabled_views: list[View] = Field(default_factory=lambda: list(VIEW_ORDER), description="Hierarchy levels fed to the classifier")
    market_aggregand: Literal["relation", "node"] = Field(
        default="relation", description="Which node states the market attention pools"
    )
    curb_mlp: bool = Field(default=True, description="Fuse curb indicators into curb node states")
    debug_checks: bool = Field(default=False, description="Assert attention invariants on every forward pass")

    @field_validator("mlp_hidden_dims")
    @classmethod
    def _positive_widths(cls, dims: list[int]) -> list[int]:
        if any(d < 1 for d in dims):
            raise ValueError(f"MLP widths must be positive, got {dims}")
        return dims

    @model_validator(mode="after")
    def _check_views(self) -> Self:
        views = set(self.enabled_views)
        if not views:
            raise ValueError("enabled_views must not be empty")
        if View.NODE not in views:
            raise ValueError("enabled_views must contain the node view")
        if len(views) != len(self.enabled_views):
            raise ValueError(f"Duplicate views in {self.enabled_views}")
        self.enabled_views = [v for v in VIEW_ORDER if v in views]
        return self

    def has(self, view: View) -> bool:
        return view in self.enabled_views

    @property
    def n_views(self) -> int:
        return len(self.enabled_views)

    @classmethod
    def for_preset(cls, preset: str, **overrides) -> "HgnnConfig":
        try:
            views = PRESETS[preset]
        except KeyError:
            raise ValueError(f"Unknown preset '{preset}', expected one of {sorted(PRESETS)}")
        return cls(**{**overrides, "enabled_views": list(views)})

    def preset_name(self) -> str:
        for name, views in PRESETS.items():
            if tuple(self.enabled_views) == views:
                return name
        return "+".join(v.value for v in self.enabled_views)


class BaselineConfig(BaseModel):
    """Hyperparameters of the reference models."""

    model_config = ConfigDict(extra="forbid")

    hidden: int = Field(default=16, ge=1, description="LSTM width of the lstm and gcn baselines")
