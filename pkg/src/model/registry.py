import logging

from src.industry import IndustryGraph
from .base import DayModel
from .baselines import BASELINE_KINDS, GcnModel, LogRegModel, LstmModel
from .config import PRESETS, BaselineConfig, HgnnConfig
from .hgnn import HgnnModel

logger = logging.getLogger(__name__)

MODEL_KINDS = ("hgnn", *BASELINE_KINDS)

# model/preset rows of the default comparison grid
DEFAULT_GRID: tuple[tuple[str, str], ...] = (
    ("hgnn", "node"),
    ("hgnn", "relation"),
    ("hgnn", "full"),
    ("logreg", "default"),
    ("lstm", "default"),
    ("gcn", "default"),
)


def build_model(
    kind: str,
    preset: str = "default",
    hgnn: HgnnConfig | None = None,
    baseline: BaselineConfig | None = None,
    graph: IndustryGraph | None = None,
) -> DayModel:
    """
    Builds a model by kind tag.

    Args:
        kind: One of MODEL_KINDS
        preset: Ablation preset for "hgnn" ("default" means the views in `hgnn`)
        hgnn: Architecture and data dimensions
        baseline: Baseline hyperparameters
        graph: Industry graph, needed by relation/market views and gcn

    Returns:
        The model

    Raises:
        ValueError: Unknown kind or preset
    """

    hgnn = hgnn or HgnnConfig()
    baseline = baseline or BaselineConfig()

    if kind == "hgnn":
        config = hgnn
        if preset != "default":
            if preset not in PRESETS:
                raise ValueError(f"Unknown preset '{preset}', expected one of {sorted(PRESETS)}")
            config = hgnn.model_copy(update={"enabled_views": list(PRESETS[preset])})
        return HgnnModel(preset=preset if preset != "default" else config.preset_name(), config=config, graph=graph)
    if kind == "logreg":
        return LogRegModel(lookback=hgnn.lookback, n_features=hgnn.n_features, n_indicators=hgnn.n_indicators)
    if kind == "lstm":
        return LstmModel(n_features=hgnn.n_features, hidden=baseline.hidden)
    if kind == "gcn":
        return GcnModel(n_features=hgnn.n_features, hidden=baseline.hidden, graph=graph)
    raise ValueError(f"Unknown model kind '{kind}', expected one of {MODEL_KINDS}")


def model_from_description(description: dict, graph: IndustryGraph | None = None) -> DayModel:
    """Rebuilds a model from the settings stored in a checkpoint."""
    kind = description.get("kind")
    if kind == "hgnn":
        return HgnnModel(preset=description["preset"], config=HgnnConfig(**description["hgnn"]), graph=graph)
    fields = {k: v for k, v in description.items() if k not in {"kind"}}
    if kind == "logreg":
        return LogRegModel(**fields)
    if kind == "lstm":
        return LstmModel(**fields)
    if kind == "gcn":
        return GcnModel(graph=graph, **fields)
    raise ValueError(f"Unknown model kind '{kind}' in checkpoint")
