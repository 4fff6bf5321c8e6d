from .state import RunState
from .nodes import RunNodeManager
from .graph_builder import NodeId, RunGraphBuilder, RunPipeline

__all__ = ["RunState", "RunNodeManager", "NodeId", "RunGraphBuilder", "RunPipeline"]
