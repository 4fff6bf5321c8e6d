"""Curb-event detection and the five minute-level curb indicators."""

import logging
import math

import numpy as np
import pandas as pd

from src.core.errors import ContractError, DataIntegrityError
from .bars import CurbEvent, IndicatorVector

logger = logging.getLogger(__name__)

# absorbs binary rounding of decimal prices in tick comparisons
PRICE_EPS = 1e-9


def tick_decimals(tick: float) -> int:
    if tick <= 0:
        raise ContractError(f"tick must be positive, got {tick}")
    return max(0, int(math.ceil(-math.log10(tick) - 1e-9)))


def round_to_tick(price: float | np.ndarray, tick: float) -> float | np.ndarray:
    """Rounds prices to the nearest multiple of `tick`, normalized to the tick's decimals."""
    return np.round(np.round(np.asarray(price, dtype=np.float64) / tick) * tick, tick_decimals(tick))


def curb_price(prev_close: float | np.ndarray, limit_rate: float, tick: float) -> float | np.ndarray:
    return round_to_tick(np.asarray(prev_close) * (1.0 + limit_rate), tick)


def is_sealed(close: float, curb: float, tick: float) -> bool:
    return abs(close - curb) <= tick / 2.0 + PRICE_EPS


def detect_curb_events(
    daily: pd.DataFrame,
    minute: pd.DataFrame,
    limit_rate: float = 0.10,
    tick: float = 0.01,
) -> list[CurbEvent]:
    """
    Finds every stock-day whose high reached the upper curb price.

    The first trading day of each stock has no previous close and never
    yields an event.

    Args:
        daily: Daily bars sorted by (stock_id, day)
        minute: Minute bars covering at least every event day
        limit_rate: Daily price limit as a fraction of the previous close
        tick: Price tick

    Returns:
        Events ordered by (day, stock_id)

    Raises:
        DataIntegrityError: Minute data missing or inconsistent for an event day
    """

    if not 0.0 < limit_rate <= 1.0:
        raise ContractError(f"limit_rate must be in (0, 1], got {limit_rate}")

    frame = daily.sort_values(["stock_id", "day"], kind="mergesort")
    prev_close = frame.groupby("stock_id", sort=False)["close"].shift(1)
    candidates = frame.assign(prev_close=prev_close).dropna(subset=["prev_close"])
    curb = curb_price(candidates["prev_close"].to_numpy(), limit_rate, tick)
    touched = candidates["high"].to_numpy() >= curb - tick / 2.0 - PRICE_EPS
    hits = candidates.loc[touched].assign(curb_price=curb[touched])

    minute_groups = minute.groupby(["stock_id", "day"], sort=False).indices if len(minute) else {}
    minute_high = minute["high"].to_numpy() if len(minute) else np.empty(0)
    minute_index = minute["minute"].to_numpy() if len(minute) else np.empty(0, dtype=np.int64)

    events: list[CurbEvent] = []
    for row in hits.itertuples(index=False):
        key = (row.stock_id, int(row.day))
        positions = minute_groups.get(key)
        if positions is None:
            raise DataIntegrityError(f"Minute data missing for curb event (stock={row.stock_id}, day={row.day})")
        positions = positions[np.argsort(minute_index[positions], kind="mergesort")]
        reached = np.flatnonzero(minute_high[positions] >= row.curb_price - tick / 2.0 - PRICE_EPS)
        if reached.size == 0:
            raise DataIntegrityError(
                f"Minute bars never reach the curb price {row.curb_price} for (stock={row.stock_id}, day={row.day})"
            )
        events.append(
            CurbEvent(
                stock_id=row.stock_id,
                day=int(row.day),
                prev_close=float(row.prev_close),
                curb_price=float(row.curb_price),
                close=float(row.close),
                touched_minute=int(minute_index[positions[reached[0]]]),
                label=int(is_sealed(row.close, row.curb_price, tick)),
            )
        )

    events.sort(key=lambda e: (e.day, e.stock_id))
    logger.info(f"Detected {len(events)} curb events, {sum(e.label for e in events)} of Type I")
    return events


def compute_curb_indicators(
    minute_bars: pd.DataFrame,
    prev_close: float,
    float_shares: float,
    ma_window: int = 5,
    touched_minute: int | None = None,
) -> IndicatorVector:
    """
    Computes the curb indicators at the touch minute from one stock-day of minute bars.

    Windows near the open are truncated (warm-up) rather than dropped: the
    moving average uses the available minutes and the rate-of-change
    reference falls back to the first close.

    Args:
        minute_bars: Minute bars of one (stock, day)
        prev_close: Previous daily close
        float_shares: Shares available to trade
        ma_window: Moving-average window in minutes
        touched_minute: Minute at which to evaluate; defaults to the last available minute

    Returns:
        The IndicatorVector at the evaluation minute

    Raises:
        DataIntegrityError: Zero moving average or zero reference price
    """

    if ma_window < 1:
        raise ContractError(f"ma_window must be >= 1, got {ma_window}")
    if len(minute_bars) == 0:
        raise DataIntegrityError("No minute bars to compute indicators from")
    if prev_close <= 0 or float_shares <= 0:
        raise DataIntegrityError(f"prev_close and float_shares must be positive, got {prev_close}, {float_shares}")

    bars = minute_bars.sort_values("minute", kind="mergesort").reset_index(drop=True)
    close = bars["close"].astype(np.float64)

    if touched_minute is None:
        at = len(bars) - 1
    else:
        matches = np.flatnonzero(bars["minute"].to_numpy() == touched_minute)
        if matches.size == 0:
            raise DataIntegrityError(f"Touched minute {touched_minute} not present in minute bars")
        at = int(matches[0])

    moving_average = close.rolling(ma_window, min_periods=1).mean()
    reference = close.shift(ma_window).fillna(close.iloc[0])
    turnover = bars["volume"].astype(np.float64).cumsum() / float_shares
    amplitude = (bars["high"].cummax() - bars["low"].cummin()) / prev_close

    ma_at = float(moving_average.iloc[at])
    ref_at = float(reference.iloc[at])
    close_at = float(close.iloc[at])
    if ma_at == 0.0 or ref_at == 0.0:
        raise DataIntegrityError(f"Degenerate minute prices: moving average {ma_at}, reference {ref_at}")

    deviation = (close_at - ma_at) / ma_at
    return IndicatorVector(
        moving_average_ratio=close_at / ma_at - 1.0,
        rate_of_change=(close_at - ref_at) / ref_at,
        turnover_rate=float(turnover.iloc[at]),
        amplitude=float(amplitude.iloc[at]),
        deviation_rate=deviation,
    )


def compute_event_indicators(
    events: list[CurbEvent],
    daily: pd.DataFrame,
    minute: pd.DataFrame,
    ma_window: int = 5,
) -> np.ndarray:
    """
    Indicator matrix aligned with `events` (one row of five indicators per event).
    """

    float_shares = daily.set_index(["stock_id", "day"])["float_shares"]
    groups = minute.groupby(["stock_id", "day"], sort=False).indices if len(minute) else {}
    rows = np.zeros((len(events), 5))
    for k, event in enumerate(events):
        positions = groups.get((event.stock_id, event.day))
        if positions is None:
            raise DataIntegrityError(f"Minute data missing for curb event (stock={event.stock_id}, day={event.day})")
        vector = compute_curb_indicators(
            minute.iloc[positions],
            prev_close=event.prev_close,
            float_shares=float(float_shares.loc[(event.stock_id, event.day)]),
            ma_window=ma_window,
            touched_minute=event.touched_minute,
        )
        rows[k] = vector.as_array()
    return rows
