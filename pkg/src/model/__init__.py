from .config import View, PRESETS, HgnnConfig, BaselineConfig
from .params import HgnnParams, init_params, hgnn_shapes, glorot_bound
from .base import DayModel, DayOutput
from .hgnn import (
    HgnnModel,
    lstm_encode,
    curb_mlp,
    fuse_node_state,
    graph_convolve,
    market_attention,
    hierarchical_fuse,
    classify,
)
from .baselines import (
    BASELINE_KINDS,
    LogRegModel,
    LstmModel,
    GcnModel,
    logreg_forward,
    lstm_classifier_forward,
    gcn_classifier_forward,
)
from .checkpoint import Checkpoint, save_checkpoint, load_checkpoint
from .registry import MODEL_KINDS, DEFAULT_GRID, build_model, model_from_description

__all__ = [
    "View",
    "PRESETS",
    "HgnnConfig",
    "BaselineConfig",
    "HgnnParams",
    "init_params",
    "hgnn_shapes",
    "glorot_bound",
    "DayModel",
    "DayOutput",
    "HgnnModel",
    "lstm_encode",
    "curb_mlp",
    "fuse_node_state",
    "graph_convolve",
    "market_attention",
    "hierarchical_fuse",
    "classify",
    "BASELINE_KINDS",
    "LogRegModel",
    "LstmModel",
    "GcnModel",
    "logreg_forward",
    "lstm_classifier_forward",
    "gcn_classifier_forward",
    "Checkpoint",
    "save_checkpoint",
    "load_checkpoint",
    "MODEL_KINDS",
    "DEFAULT_GRID",
    "build_model",
    "model_from_description",
]
