import os
from pydantic import BaseModel, Field


class AppSession(BaseModel):
    """
    A general session for the HGNN tooling.

    Environment-backed settings are exposed as properties so that a `.env`
    file loaded by `main.py` is picked up lazily, after `load_dotenv()`.
    """

    seed_variable: str = Field(
        default="HGNN_SEED",
        description="Environment variable overriding the configured seed",
        exclude=True,
    )

    log_level_variable: str = Field(
        default="HGNN_LOG_LEVEL",
        description="Environment variable holding the log level name",
        exclude=True,
    )

    debug_checks_variable: str = Field(
        default="HGNN_DEBUG_CHECKS",
        description="Environment variable enabling runtime invariant checks",
        exclude=True,
    )

    @property
    def seed_override(self) -> int | None:
        raw = os.getenv(self.seed_variable)

        if raw is None or not raw.strip():
            return None
        try:
            return int(raw.strip())
        except ValueError:
            raise ValueError(f"{self.seed_variable} must be an integer, got '{raw}'")

    @property
    def log_level(self) -> str:
        return os.getenv(self.log_level_variable, "INFO").strip().upper() or "INFO"

    @property
    def debug_checks(self) -> bool:
        raw = os.getenv(self.debug_checks_variable, "")
        return raw.strip().lower() in {"1", "true", "yes", "on"}

    def resolve_seed(self, flag_seed: int | None, config_seed: int) -> int:
        """
        Resolves the effective seed with precedence flag > env > config.

        Args:
            flag_seed: Seed passed on the command line, if any
            config_seed: Seed stored in the experiment config

        Returns:
            The seed to use
        """

        if flag_seed is not None:
            return flag_seed

        env_seed = self.seed_override
        if env_seed is not None:
            return env_seed

        return config_seed
