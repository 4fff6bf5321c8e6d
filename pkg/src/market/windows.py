"""
Lookback-window assembly, normalization and temporal splitting.

The window of day t covers the stock's last T trading days strictly before
t, so nothing from the event day itself (whose close decides the label)
enters the inputs. Prices inside a window are expressed relative to the
window's last close.
"""

import logging
from typing import Self, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.core.errors import ContractError, EmptySplitError, ShapeError
from .bars import CurbEvent, IndicatorVector, SampleWindow

logger = logging.getLogger(__name__)

FEATURE_NAMES = ("open", "high", "low", "close", "volume", "turnover")
N_FEATURES = len(FEATURE_NAMES)
N_INDICATORS = 5


class DaySample(BaseModel):
    """
    Everything the models see for one trading day.

    Attributes:
        day: Trading day index
        features: n x T x F windows for every graph node (zeros where history is missing)
        has_history: n flags, False where the stock lacks T prior days
        curb_nodes: Node indices of the day's curb stocks
        indicators: m x 5 indicator rows aligned with curb_nodes
        labels: m labels aligned with curb_nodes
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    day: int
    features: np.ndarray
    has_history: np.ndarray
    curb_nodes: np.ndarray
    indicators: np.ndarray
    labels: np.ndarray

    @model_validator(mode="after")
    def _shapes(self) -> Self:
        if self.features.ndim != 3:
            raise ValueError(f"features must be n x T x F, got {self.features.shape}")
        m = len(self.curb_nodes)
        if self.indicators.shape != (m, N_INDICATORS) or self.labels.shape != (m,):
            raise ValueError(
                f"day {self.day}: {m} curb nodes but indicators {self.indicators.shape}, labels {self.labels.shape}"
            )
        if m and not np.all(self.has_history[self.curb_nodes]):
            raise ValueError(f"day {self.day}: every curb node needs a full window")
        return self

    @property
    def n_nodes(self) -> int:
        return self.features.shape[0]

    @property
    def n_curb(self) -> int:
        return len(self.curb_nodes)


class FeatureStats(BaseModel):
    """Per-column mean/std used for z-scoring, computed on training days only."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    feature_mean: np.ndarray
    feature_std: np.ndarray
    indicator_mean: np.ndarray
    indicator_std: np.ndarray
    train_days: tuple[int, ...]


class Dataset(BaseModel):
    """
    Day-grouped samples plus universe metadata.

    Attributes:
        days: Day samples ordered by day
        stock_ids: Graph node order
        industries: stock_id -> industry
        lookback: T
        stats: Normalization statistics, None while raw
        skipped: Curb events dropped for insufficient history
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    days: list[DaySample]
    stock_ids: tuple[str, ...]
    industries: dict[str, str] = Field(default_factory=dict)
    lookback: int = Field(..., ge=1)
    stats: FeatureStats | None = None
    skipped: int = Field(default=0, ge=0)

    @property
    def day_indices(self) -> list[int]:
        return [d.day for d in self.days]

    @property
    def n_events(self) -> int:
        return sum(d.n_curb for d in self.days)

    def subset(self, day_indices: Sequence[int]) -> "Dataset":
        wanted = set(day_indices)
        return self.model_copy(update={"days": [d for d in self.days if d.day in wanted]})

    def labels(self) -> np.ndarray:
        if not self.days:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate([d.labels for d in self.days]).astype(np.int64)

    def sample_windows(self, day: int) -> list[SampleWindow]:
        """Per-stock view of one day, for inspection and serialization."""
        matches = [d for d in self.days if d.day == day]
        if not matches:
            raise ContractError(f"Day {day} not in dataset")
        sample = matches[0]
        curb_row = {int(node): k for k, node in enumerate(sample.curb_nodes)}
        windows = []
        for node, stock_id in enumerate(self.stock_ids):
            if not sample.has_history[node]:
                continue
            k = curb_row.get(node)
            windows.append(
                SampleWindow(
                    stock_id=stock_id,
                    day=sample.day,
                    features=sample.features[node].tolist(),
                    indicators=None if k is None else IndicatorVector.from_array(sample.indicators[k]),
                    label=None if k is None else int(sample.labels[k]),
                    node_index=node,
                )
            )
        return windows


def _encode_window(block: np.ndarray) -> np.ndarray:
    """block: T x 6 raw (open, high, low, close, volume, float_shares) -> T x F features."""
    last_close = block[-1, 3]
    prices = block[:, 0:4] / last_close - 1.0
    volume = np.log1p(block[:, 4:5])
    turnover = block[:, 4:5] / block[:, 5:6]
    return np.concatenate([prices, volume, turnover], axis=1)


def build_windows(
    daily: pd.DataFrame,
    events: Sequence[CurbEvent],
    indicators: np.ndarray,
    stock_ids: Sequence[str],
    lookback: int,
    n_features: int = N_FEATURES,
    industries: dict[str, str] | None = None,
) -> Dataset:
    """
    Assembles one DaySample per day that has at least one usable curb event.

    Args:
        daily: Daily bars
        events: Curb events
        indicators: Indicator rows aligned with `events`
        stock_ids: Graph node order
        lookback: T, the number of prior trading days per window
        n_features: F; only the six documented daily features are supported
        industries: Optional stock_id -> industry metadata

    Returns:
        A raw (unnormalized) Dataset

    Raises:
        ShapeError: Unsupported feature count or misaligned indicators
    """

    if n_features != N_FEATURES:
        raise ShapeError(f"Supported daily features are {FEATURE_NAMES}, got F={n_features}")
    if lookback < 1:
        raise ContractError(f"lookback must be >= 1, got {lookback}")
    indicators = np.asarray(indicators, dtype=np.float64).reshape(len(events), N_INDICATORS)

    node_of = {stock_id: k for k, stock_id in enumerate(stock_ids)}
    raw_columns = ["open", "high", "low", "close", "volume", "float_shares"]
    history: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for stock_id, group in daily.groupby("stock_id", sort=False):
        node = node_of.get(stock_id)
        if node is None:
            continue
        group = group.sort_values("day", kind="mergesort")
        history[node] = (group["day"].to_numpy(), group[raw_columns].to_numpy(dtype=np.float64))

    events_by_day: dict[int, list[int]] = {}
    for k, event in enumerate(events):
        events_by_day.setdefault(event.day, []).append(k)

    n = len(stock_ids)
    days: list[DaySample] = []
    skipped = 0
    for day in sorted(events_by_day):
        features = np.zeros((n, lookback, N_FEATURES))
        has_history = np.zeros(n, dtype=bool)
        for node, (stock_days, raw) in history.items():
            end = int(np.searchsorted(stock_days, day, side="left"))
            if end < lookback:
                continue
            features[node] = _encode_window(raw[end - lookback:end])
            has_history[node] = True

        curb_nodes, rows, labels = [], [], []
        for k in events_by_day[day]:
            node = node_of.get(events[k].stock_id)
            if node is None or not has_history[node]:
                skipped += 1
                continue
            curb_nodes.append(node)
            rows.append(indicators[k])
            labels.append(events[k].label)
        if not curb_nodes:
            continue

        days.append(
            DaySample(
                day=day,
                features=features,
                has_history=has_history,
                curb_nodes=np.asarray(curb_nodes, dtype=np.int64),
                indicators=np.asarray(rows, dtype=np.float64).reshape(-1, N_INDICATORS),
                labels=np.asarray(labels, dtype=np.int64),
            )
        )

    if skipped:
        logger.warning(f"Skipped {skipped} curb events with fewer than {lookback} prior trading days")
    logger.info(f"Built {len(days)} day samples with {sum(d.n_curb for d in days)} curb events")
    return Dataset(
        days=days,
        stock_ids=tuple(stock_ids),
        industries=dict(industries or {}),
        lookback=lookback,
        skipped=skipped,
    )


def split_days(days: Sequence[int], train_frac: float, val_frac: float) -> tuple[list[int], list[int], list[int]]:
    """
    Contiguous chronological split of `days` into train < val < test.

    Raises:
        ContractError: Fractions out of range
        EmptySplitError: Any split ends up empty
    """

    if not (0.0 < train_frac < 1.0 and 0.0 < val_frac < 1.0 and train_frac + val_frac < 1.0):
        raise ContractError(f"Need 0 < train_frac, val_frac and train_frac + val_frac < 1, got {train_frac}, {val_frac}")
    ordered = sorted(days)
    n_train = int(round(len(ordered) * train_frac))
    n_val = int(round(len(ordered) * val_frac))
    train, val, test = ordered[:n_train], ordered[n_train:n_train + n_val], ordered[n_train + n_val:]
    for name, part in (("train", train), ("val", val), ("test", test)):
        if not part:
            raise EmptySplitError(f"The {name} split is empty ({len(ordered)} days, fractions {train_frac}/{val_frac})")
    return train, val, test


def _safe_std(values: np.ndarray) -> np.ndarray:
    std = values.std(axis=0)
    return np.where(std > 0.0, std, 1.0)


def normalize(dataset: Dataset, train_frac: float = 0.7, val_frac: float = 0.1) -> Dataset:
    """
    Z-scores features and indicators with statistics from the training days only.

    Feature statistics pool every window row of every stock with history on a
    training day; indicator statistics pool the training days' curb events.
    Missing-history rows stay zero.
    """

    train_days, _, _ = split_days(dataset.day_indices, train_frac, val_frac)
    train = set(train_days)
    train_samples = [d for d in dataset.days if d.day in train]

    rows = np.concatenate([d.features[d.has_history].reshape(-1, N_FEATURES) for d in train_samples])
    feature_mean, feature_std = rows.mean(axis=0), _safe_std(rows)
    events = np.concatenate([d.indicators for d in train_samples])
    indicator_mean, indicator_std = events.mean(axis=0), _safe_std(events)

    days = []
    for d in dataset.days:
        features = np.where(d.has_history[:, None, None], (d.features - feature_mean) / feature_std, 0.0)
        days.append(
            d.model_copy(update={"features": features, "indicators": (d.indicators - indicator_mean) / indicator_std})
        )

    stats = FeatureStats(
        feature_mean=feature_mean,
        feature_std=feature_std,
        indicator_mean=indicator_mean,
        indicator_std=indicator_std,
        train_days=tuple(train_days),
    )
    return dataset.model_copy(update={"days": days, "stats": stats})


def temporal_split(dataset: Dataset, train_frac: float = 0.7, val_frac: float = 0.1) -> tuple[Dataset, Dataset, Dataset]:
    """Splits into contiguous train, validation and test datasets (train days < val days < test days)."""
    train, val, test = split_days(dataset.day_indices, train_frac, val_frac)
    return dataset.subset(train), dataset.subset(val), dataset.subset(test)
