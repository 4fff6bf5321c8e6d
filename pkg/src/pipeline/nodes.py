import logging
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, Field

from src.core import AppSession
from src.core.errors import DivergenceError, HgnnError
from src.core.io import atomic_write_json
from src.market.corpus import DataConfig, load_corpus
from src.model import BaselineConfig, HgnnConfig, build_model, save_checkpoint
from src.training import TrainConfig, prepare_data, record_run, train
from .state import RunState

logger = logging.getLogger(__name__)


def run_name(state: RunState) -> str:
    spec = state["spec"]
    return f"{spec.model}_{spec.preset}_seed{spec.seed}"


class RunNodeManager(BaseModel):
    """
    A run node manager that creates the nodes of one training run.

    Each node reads what it needs from the run state and returns only the
    keys it adds.
    """

    data_config: DataConfig = Field(default_factory=DataConfig, description="Windowing and split settings")
    hgnn: HgnnConfig = Field(default_factory=HgnnConfig, description="Hierarchical model settings")
    baseline: BaselineConfig = Field(default_factory=BaselineConfig, description="Baseline settings")
    train_config: TrainConfig = Field(default_factory=TrainConfig, description="Optimizer and schedule")
    fingerprint: str = Field(default="", description="Experiment configuration fingerprint")
    app_session: AppSession = Field(default_factory=AppSession, description="Environment-backed settings")

    def prepare(self, state: RunState) -> dict:
        """
        Loads and splits the corpus unless the caller already supplied prepared data.

        Raises:
            HgnnError: Missing or malformed corpus files
            ValueError: Any other preparation failure
        """

        logger.info("prepare method called")
        if "data" in state:
            return {}

        data_dir = state.get("data_dir")
        if not data_dir:
            raise ValueError("Invalid run state: neither prepared data nor a data directory")

        try:
            return {"data": prepare_data(load_corpus(data_dir), self.data_config)}
        except HgnnError as e:
            logger.error(f"Data preparation failed: {e}")
            raise
        except Exception as e:
            logger.error(f"Unexpected error during data preparation: {e}")
            raise ValueError(f"Failed to prepare data from {data_dir}: {e}")

    def train_model(self, state: RunState) -> dict:
        """Trains the run's model; divergence is recorded in the state for the abort branch."""

        logger.info("train_model method called")
        spec = state["spec"]
        data = state["data"]
        hgnn = self.hgnn
        if self.app_session.debug_checks and not hgnn.debug_checks:
            hgnn = hgnn.model_copy(update={"debug_checks": True})

        model = build_model(spec.model, spec.preset, hgnn=hgnn, baseline=self.baseline, graph=data.graph)
        try:
            result = train(model, data.train, data.val, self.train_config, spec.seed)
        except DivergenceError as e:
            logger.error(f"Run {run_name(state)} diverged: {e}")
            return {"model": model, "error": str(e)}
        return {"model": model, "result": result}

    def divergence_condition(self, state: RunState) -> Literal["abort", "evaluate"]:
        """
        A decision router sending diverged runs to the abort node.

        :param state: Run state after training
        :return: `abort` when training diverged, otherwise `evaluate`
        """

        logger.info("divergence_condition is called")
        return "abort" if state.get("error") else "evaluate"

    def evaluate_model(self, state: RunState) -> dict:
        logger.info("evaluate_model method called")
        record = record_run(state["spec"], state["model"], state["result"], state["data"])
        logger.info(
            f"Run {run_name(state)}: val F1 {record.val.f1:.4f}, "
            f"test accuracy {record.test.accuracy:.4f} (majority {record.test.majority_accuracy:.4f}), test F1 {record.test.f1:.4f}"
        )
        return {"record": record}

    def persist(self, state: RunState) -> dict:
        """Saves the best-validation checkpoint when the run has an output directory."""

        logger.info("persist method called")
        out_dir = state.get("out_dir")
        if not out_dir:
            return {}

        checkpoint = state["result"].checkpoint(state["model"], fingerprint=self.fingerprint)
        try:
            path = save_checkpoint(checkpoint, Path(out_dir) / "checkpoints" / f"{run_name(state)}.json")
        except OSError as e:
            logger.error(f"Could not write checkpoint: {e}")
            raise ValueError(f"Failed to persist run {run_name(state)}: {e}")
        record = state["record"].model_copy(update={"checkpoint_path": str(path)})
        return {"record": record, "checkpoint_path": str(path)}

    def abort(self, state: RunState) -> dict:
        """Writes a failure marker next to the checkpoints, then stops the run."""

        logger.info("abort method called")
        out_dir = state.get("out_dir")
        if out_dir:
            spec = state["spec"]
            atomic_write_json(
                Path(out_dir) / "failed" / f"{run_name(state)}.json",
                {"model": spec.model, "preset": spec.preset, "seed": spec.seed, "error": state.get("error", "")},
            )
        raise DivergenceError(state.get("error", f"Run {run_name(state)} diverged"))
