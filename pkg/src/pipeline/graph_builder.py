from enum import Enum
from pathlib import Path

from pydantic import BaseModel, Field, PrivateAttr
from langgraph.graph import START, END, StateGraph
from langgraph.graph.state import CompiledStateGraph

from src.core import AppSession
from src.market.corpus import DataConfig
from src.model import BaselineConfig, HgnnConfig
from src.training import PreparedData, RunRecord, RunSpec, TrainConfig
from .nodes import RunNodeManager
from .state import RunState


class NodeId(str, Enum):
    PREPARE = "prepare"
    TRAIN = "train"
    EVALUATE = "evaluate"
    PERSIST = "persist"
    ABORT = "abort"


class RunGraphBuilder(BaseModel):
    """
    A graph builder that constructs the workflow of one training run.

    The graph prepares data, trains, and then either evaluates and
    persists the best checkpoint or aborts when training diverged.
    """

    data_config: DataConfig = Field(default_factory=DataConfig)
    hgnn: HgnnConfig = Field(default_factory=HgnnConfig)
    baseline: BaselineConfig = Field(default_factory=BaselineConfig)
    train_config: TrainConfig = Field(default_factory=TrainConfig)
    fingerprint: str = ""
    app_session: AppSession = Field(default_factory=AppSession, description="Environment-backed settings")

    def build(self) -> CompiledStateGraph:
        """
        Builds and compiles the run graph.

        Returns:
            CompiledStateGraph: A compiled LangGraph state graph ready for execution

        Raises:
            ValueError: If node manager initialization fails
            RuntimeError: If graph compilation fails
        """
        try:
            graph_builder = StateGraph(RunState)
            node_manager = RunNodeManager(
                data_config=self.data_config,
                hgnn=self.hgnn,
                baseline=self.baseline,
                train_config=self.train_config,
                fingerprint=self.fingerprint,
                app_session=self.app_session,
            )
        except Exception as e:
            raise ValueError(f"Failed to initialize graph components: {e}")

        graph_builder.add_node(NodeId.PREPARE.value, node_manager.prepare)
        graph_builder.add_node(NodeId.TRAIN.value, node_manager.train_model)
        graph_builder.add_node(NodeId.EVALUATE.value, node_manager.evaluate_model)
        graph_builder.add_node(NodeId.PERSIST.value, node_manager.persist)
        graph_builder.add_node(NodeId.ABORT.value, node_manager.abort)

        graph_builder.add_edge(START, NodeId.PREPARE.value)
        graph_builder.add_edge(NodeId.PREPARE.value, NodeId.TRAIN.value)
        graph_builder.add_conditional_edges(
            NodeId.TRAIN.value,
            node_manager.divergence_condition,
            {
                "abort": NodeId.ABORT.value,
                "evaluate": NodeId.EVALUATE.value,
            },
        )
        graph_builder.add_edge(NodeId.EVALUATE.value, NodeId.PERSIST.value)
        graph_builder.add_edge(NodeId.PERSIST.value, END)
        graph_builder.add_edge(NodeId.ABORT.value, END)

        try:
            return graph_builder.compile()
        except Exception as e:
            raise RuntimeError(f"Failed to compile run graph: {e}")


class RunPipeline(RunGraphBuilder):
    """
    The compiled run graph plus a typed entry point.

    One compiled graph serves every run of an experiment; invocations share
    no mutable state, so worker threads may call `run` concurrently.
    """

    _graph: CompiledStateGraph = PrivateAttr()

    def model_post_init(self, __context) -> None:
        self._graph = self.build()

    @property
    def graph(self) -> CompiledStateGraph:
        return self._graph

    def run(
        self,
        spec: RunSpec,
        data: PreparedData | None = None,
        data_dir: str | Path | None = None,
        out_dir: str | Path | None = None,
    ) -> RunRecord:
        """
        Executes one run.

        Args:
            spec: Model, preset and seed
            data: Prepared splits; loaded from `data_dir` when omitted
            data_dir: Corpus directory
            out_dir: Where the checkpoint is written, None skips persisting

        Returns:
            The run's record

        Raises:
            DivergenceError: Training produced a non-finite loss
        """

        state: RunState = {"spec": spec}
        if data is not None:
            state["data"] = data
        if data_dir is not None:
            state["data_dir"] = str(data_dir)
        if out_dir is not None:
            state["out_dir"] = str(out_dir)
        final = self._graph.invoke(state)
        return final["record"]
