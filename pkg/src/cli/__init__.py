from .config import ExperimentConfig, PathsConfig
from .commands import main

__all__ = ["ExperimentConfig", "PathsConfig", "main"]
