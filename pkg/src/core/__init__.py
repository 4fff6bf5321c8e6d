from .app_session import AppSession
from .logger import configure_logger
from .errors import (
    HgnnError,
    ShapeError,
    ContractError,
    IndexRangeError,
    SchemaError,
    DataIntegrityError,
    GeneratorConfigError,
    EmptySplitError,
    DivergenceError,
    NoRunsFoundError,
)

__all__ = [
    "AppSession",
    "configure_logger",
    "HgnnError",
    "ShapeError",
    "ContractError",
    "IndexRangeError",
    "SchemaError",
    "DataIntegrityError",
    "GeneratorConfigError",
    "EmptySplitError",
    "DivergenceError",
    "NoRunsFoundError",
]
