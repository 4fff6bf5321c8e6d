"""
A corpus is the trio of daily, minute and industry CSV files in one data
directory, plus the manifest written by the generator.
"""

import logging
import os
import shutil
import tempfile
from pathlib import Path
from typing import Self

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.core.errors import SchemaError
from src.core.io import atomic_write_json, atomic_write_text, canonical_fingerprint, file_sha256
from .curb import compute_event_indicators, detect_curb_events
from .ingest import load_daily_csv, load_industry_csv, load_minute_csv
from .synthetic import SyntheticConfig, SyntheticMarket
from .windows import Dataset, build_windows, normalize

logger = logging.getLogger(__name__)

DAILY_FILE = "daily.csv"
MINUTE_FILE = "minute.csv"
INDUSTRY_FILE = "industry.csv"
MANIFEST_FILE = "manifest.json"


class DataConfig(BaseModel):
    """How raw bars become model samples."""

    model_config = ConfigDict(extra="forbid")

    lookback: int = Field(default=10, ge=1, description="T, prior trading days per window")
    limit_rate: float = Field(default=0.10, gt=0.0, le=1.0, description="Daily price limit")
    tick: float = Field(default=0.01, gt=0.0, description="Price tick")
    ma_window: int = Field(default=5, ge=1, description="Moving-average window of the minute indicators")
    train_frac: float = Field(default=0.7, gt=0.0, lt=1.0, description="Fraction of event days used for training")
    val_frac: float = Field(default=0.1, gt=0.0, lt=1.0, description="Fraction of event days used for validation")
    minutes_per_day: int = Field(default=240, ge=2, description="Minute bars per trading day")

    @model_validator(mode="after")
    def _check_split(self) -> Self:
        if self.train_frac + self.val_frac >= 1.0:
            raise ValueError(f"train_frac + val_frac must be < 1, got {self.train_frac + self.val_frac}")
        return self


class Corpus(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    daily: pd.DataFrame
    minute: pd.DataFrame
    industries: dict[str, str]

    @property
    def stock_ids(self) -> list[str]:
        return sorted(self.daily["stock_id"].unique().tolist())


def load_corpus(data_dir: str | Path) -> Corpus:
    """
    Loads the three CSV files of a data directory.

    Raises:
        SchemaError: A file is missing or does not match its schema
        DataIntegrityError: A file violates bar or industry invariants
    """

    data_dir = Path(data_dir)
    missing = [name for name in (INDUSTRY_FILE, DAILY_FILE, MINUTE_FILE) if not (data_dir / name).is_file()]
    if missing:
        raise SchemaError(f"{data_dir}: missing corpus files {missing}")

    daily = load_daily_csv(data_dir / DAILY_FILE)
    industries = load_industry_csv(data_dir / INDUSTRY_FILE, daily["stock_id"].unique())
    minute = load_minute_csv(data_dir / MINUTE_FILE)
    return Corpus(daily=daily, minute=minute, industries=industries)


def corpus_from_market(market: SyntheticMarket) -> Corpus:
    return Corpus(daily=market.daily, minute=market.minute, industries=market.industries)


def prepare_dataset(corpus: Corpus, config: DataConfig | None = None, normalized: bool = True) -> Dataset:
    """
    Detects curb events, computes indicators and assembles the day-grouped dataset.

    Args:
        corpus: Loaded bars and industries
        config: Window and split settings
        normalized: Z-score with training-day statistics

    Returns:
        The dataset, nodes ordered by sorted stock id
    """

    config = config or DataConfig()
    events = detect_curb_events(corpus.daily, corpus.minute, config.limit_rate, config.tick)
    indicators = compute_event_indicators(events, corpus.daily, corpus.minute, config.ma_window)
    dataset = build_windows(
        corpus.daily,
        events,
        indicators,
        corpus.stock_ids,
        config.lookback,
        industries=corpus.industries,
    )
    if not normalized:
        return dataset
    return normalize(dataset, config.train_frac, config.val_frac)


def _csv_text(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, lineterminator="\n")


def write_corpus(market: SyntheticMarket, out_dir: str | Path, config: SyntheticConfig) -> dict:
    """
    Writes daily/minute/industry CSVs and manifest.json to `out_dir`.

    Files are staged in a temporary sibling directory that replaces the
    target only once every file is complete.

    Args:
        market: Generated market
        out_dir: Destination directory
        config: The generator settings, hashed into the manifest

    Returns:
        The manifest
    """

    out_dir = Path(out_dir)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=f".{out_dir.name}.", dir=out_dir.parent))
    try:
        industry = pd.DataFrame(sorted(market.industries.items()), columns=["stock_id", "industry"])
        atomic_write_text(staging / DAILY_FILE, _csv_text(market.daily))
        atomic_write_text(staging / MINUTE_FILE, _csv_text(market.minute))
        atomic_write_text(staging / INDUSTRY_FILE, _csv_text(industry))

        events = detect_curb_events(market.daily, market.minute, config.limit_rate, config.tick)
        labels = np.array([e.label for e in events], dtype=np.float64)
        manifest = {
            "seed": config.seed,
            "config_hash": canonical_fingerprint(config.model_dump(mode="json")),
            "limit_rate": config.limit_rate,
            "tick": config.tick,
            "rows": {"daily": len(market.daily), "minute": len(market.minute), "industry": len(industry)},
            "curb_events": len(events),
            "label_balance": float(labels.mean()) if labels.size else 0.0,
            "files": {name: file_sha256(staging / name) for name in (DAILY_FILE, MINUTE_FILE, INDUSTRY_FILE)},
        }
        atomic_write_json(staging / MANIFEST_FILE, manifest)

        if out_dir.exists():
            for item in staging.iterdir():
                os.replace(item, out_dir / item.name)
            staging.rmdir()
        else:
            os.replace(staging, out_dir)
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise

    logger.info(f"Wrote corpus to {out_dir}: {manifest['curb_events']} curb events, label balance {manifest['label_balance']:.3f}")
    return manifest
