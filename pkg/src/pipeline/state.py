from typing import NotRequired, TypedDict

from src.model import DayModel
from src.training import PreparedData, RunRecord, RunSpec, TrainResult


class RunState(TypedDict):
    """State that flows through one training run"""
    spec: RunSpec
    data_dir: NotRequired[str]
    out_dir: NotRequired[str]
    data: NotRequired[PreparedData]
    model: NotRequired[DayModel]
    result: NotRequired[TrainResult]
    record: NotRequired[RunRecord]
    checkpoint_path: NotRequired[str]
    error: NotRequired[str]
