from .tape import DiffArray, Tape, TapeRecord
from .grad_check import GradCheckReport, ParamCheck, grad_check
from . import ops

__all__ = [
    "DiffArray",
    "Tape",
    "TapeRecord",
    "GradCheckReport",
    "ParamCheck",
    "grad_check",
    "ops",
]
