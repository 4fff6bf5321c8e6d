"""
Synthetic market with a plantable industry-relational seal signal.

Daily log-returns follow a market + industry + idiosyncratic factor model.
Conditional on touching the upper curb, whether a stock seals at the curb
is a logistic function of its industry factor and of its peers' same-day
returns, so classifiers that see industry neighbours have an edge.
"""

import logging
from typing import Literal, Self

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.core.errors import GeneratorConfigError
from .bars import DAILY_COLUMNS, MINUTE_COLUMNS
from .curb import curb_price, round_to_tick

logger = logging.getLogger(__name__)

# days inspected by the zero-event feasibility check
FEASIBILITY_DAYS = 100


class SyntheticConfig(BaseModel):
    """Settings of the synthetic market generator."""

    model_config = ConfigDict(extra="forbid")

    n_stocks: int = Field(default=200, ge=2, description="Universe size")
    n_industries: int = Field(default=20, ge=1, description="Number of industries")
    n_days: int = Field(default=500, ge=2, description="Trading days to generate")
    limit_rate: float = Field(default=0.10, gt=0.0, le=0.2, description="Daily price limit")
    tick: float = Field(default=0.01, gt=0.0, description="Price tick")
    minutes_per_day: int = Field(default=240, ge=2, description="Minute bars per trading day")
    minute_bars: Literal["curb_days", "all_days"] = Field(
        default="curb_days", description="Which stock-days receive minute bars"
    )

    market_vol: float = Field(default=0.012, ge=0.0, description="Daily market factor volatility")
    industry_vol: float = Field(default=0.035, ge=0.0, description="Industry factor innovation volatility")
    industry_persistence: float = Field(default=0.3, ge=0.0, lt=1.0, description="AR(1) coefficient of industry factors")
    idio_vol: float = Field(default=0.02, ge=0.0, description="Idiosyncratic return volatility")
    open_vol: float = Field(default=0.008, ge=0.0, description="Overnight gap volatility")
    intraday_vol: float = Field(default=0.025, ge=0.0, description="Scale of intraday excursions beyond open/close")
    beta_low: float = Field(default=0.8, description="Lower bound of factor loadings")
    beta_high: float = Field(default=1.2, description="Upper bound of factor loadings")

    seal_industry_strength: float = Field(default=2.5, ge=0.0, description="Seal logit weight of the standardized industry factor")
    seal_peer_strength: float = Field(default=1.0, ge=0.0, description="Seal logit weight of the standardized peer mean return")

    target_event_rate: tuple[float, float] = Field(
        default=(0.02, 0.08), description="Expected band of curb stock-days over all stock-days"
    )
    seed: int = Field(default=7, description="Generator seed")

    @model_validator(mode="after")
    def _check_universe(self) -> Self:
        if self.n_stocks < 2 * self.n_industries:
            raise ValueError(
                f"Need at least 2 stocks per industry, got {self.n_stocks} stocks for {self.n_industries} industries"
            )
        if self.beta_low > self.beta_high:
            raise ValueError(f"beta_low {self.beta_low} exceeds beta_high {self.beta_high}")
        low, high = self.target_event_rate
        if not 0.0 <= low <= high <= 1.0:
            raise ValueError(f"Invalid target_event_rate {self.target_event_rate}")
        return self


class SyntheticMarket(BaseModel):
    """
    Generated bars plus the latent factors behind them.

    Attributes:
        daily: Daily bars (DAILY_COLUMNS)
        minute: Minute bars (MINUTE_COLUMNS)
        industries: stock_id -> industry
        industry_factors: n_days x n_industries latent industry factor
        industry_names: Column labels of industry_factors
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    daily: pd.DataFrame
    minute: pd.DataFrame
    industries: dict[str, str]
    industry_factors: np.ndarray
    industry_names: tuple[str, ...]
    n_touched: int = Field(default=0, ge=0)

    @property
    def event_rate(self) -> float:
        return self.n_touched / max(len(self.daily), 1)

    def factor_of(self, stock_id: str, day: int) -> float:
        column = self.industry_names.index(self.industries[stock_id])
        return float(self.industry_factors[day, column])


def _ids(prefix: str, count: int, min_width: int) -> list[str]:
    width = max(min_width, len(str(count - 1)))
    return [f"{prefix}{i:0{width}d}" for i in range(count)]


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _bridge(rng: np.random.Generator, start: float, end: float, steps: int, vol: float) -> np.ndarray:
    """Brownian bridge pinned at `start` and `end`; returns steps + 1 points."""
    walk = np.concatenate([[0.0], np.cumsum(rng.normal(0.0, vol, size=steps))])
    frac = np.arange(steps + 1) / steps
    return start + walk - frac * walk[-1] + frac * (end - start)


def _factor_paths(config: SyntheticConfig) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0]))
    market = rng.normal(0.0, config.market_vol, size=config.n_days)
    shocks = rng.normal(0.0, config.industry_vol, size=(config.n_days, config.n_industries))
    rho = config.industry_persistence
    factors = np.empty_like(shocks)
    factors[0] = shocks[0] / np.sqrt(1.0 - rho * rho)
    for t in range(1, config.n_days):
        factors[t] = rho * factors[t - 1] + shocks[t]
    return market, factors


class _StockDraws(BaseModel):
    """Per-stock random draws, all taken from the stock's own stream."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    returns: np.ndarray
    gaps: np.ndarray
    up_excursion: np.ndarray
    down_excursion: np.ndarray
    seal_uniform: np.ndarray
    fallback: np.ndarray
    volume: np.ndarray
    touch_minute: np.ndarray
    initial_price: float
    float_shares: float


def _draw_stock(config: SyntheticConfig, index: int, market: np.ndarray, industry_factor: np.ndarray) -> _StockDraws:
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 1, index]))
    days = config.n_days
    beta_market, beta_industry = rng.uniform(config.beta_low, config.beta_high, size=2)
    limit = np.log1p(config.limit_rate)
    floor = np.log1p(-config.limit_rate)

    noise = rng.normal(0.0, config.idio_vol, size=days)
    returns = np.clip(beta_market * market + beta_industry * industry_factor + noise, floor, limit)
    gaps = np.clip(rng.normal(0.0, config.open_vol, size=days), floor, limit)
    up = np.abs(rng.normal(0.0, config.intraday_vol, size=days))
    down = np.abs(rng.normal(0.0, config.intraday_vol, size=days))
    base_volume = rng.uniform(2e5, 2e6)
    volume = np.floor(base_volume * np.exp(rng.normal(0.0, 0.3, size=days)) * (1.0 + 8.0 * np.abs(returns)))

    return _StockDraws(
        returns=returns,
        gaps=gaps,
        up_excursion=up,
        down_excursion=down,
        seal_uniform=rng.uniform(size=days),
        fallback=rng.uniform(0.005, 0.04, size=days),
        volume=volume,
        touch_minute=rng.integers(0, config.minutes_per_day - 1, size=days),
        initial_price=float(round_to_tick(rng.uniform(5.0, 50.0), config.tick)),
        float_shares=float(np.floor(rng.uniform(5e7, 5e8))),
    )


def _seal_flags(
    config: SyntheticConfig,
    draws: list[_StockDraws],
    factors: np.ndarray,
    industry_of: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Touch and seal flags (n_stocks x n_days) in return space."""
    returns = np.stack([d.returns for d in draws])
    gaps = np.stack([d.gaps for d in draws])
    up = np.stack([d.up_excursion for d in draws])
    touched = np.maximum(gaps, returns) + up >= np.log1p(config.limit_rate)
    touched[:, 0] = False

    # mean same-day return of industry peers, self excluded
    n_ind = config.n_industries
    sums = np.zeros((n_ind, config.n_days))
    np.add.at(sums, industry_of, returns)
    counts = np.bincount(industry_of, minlength=n_ind).astype(np.float64)
    peer = (sums[industry_of] - returns) / (counts[industry_of] - 1.0)[:, None]

    own_factor = factors.T[industry_of]
    factor_std = own_factor.std() or 1.0
    peer_std = peer.std() or 1.0
    score = (
        config.seal_industry_strength * own_factor / factor_std
        + config.seal_peer_strength * peer / peer_std
    )
    intercept = -float(np.median(score[touched])) if touched.any() else 0.0
    seal_uniform = np.stack([d.seal_uniform for d in draws])
    sealed = touched & (seal_uniform < _sigmoid(score + intercept))
    return touched, sealed


def _minute_path(
    rng: np.random.Generator,
    config: SyntheticConfig,
    prev_close: float,
    day_open: float,
    day_close: float,
    touch_minute: int | None,
    sealed: bool,
) -> dict[str, np.ndarray]:
    minutes = config.minutes_per_day
    tick = config.tick
    up = float(curb_price(prev_close, config.limit_rate, tick))
    down = float(round_to_tick(prev_close * (1.0 - config.limit_rate), tick))
    vol = config.intraday_vol / np.sqrt(minutes)
    start = np.log(day_open / prev_close)

    if touch_minute is None:
        path = _bridge(rng, start, np.log(day_close / prev_close), minutes, vol)[1:]
        closes = np.clip(round_to_tick(prev_close * np.exp(path), tick), down, up - tick)
        cap = np.full(minutes, up - tick)
    else:
        m = touch_minute
        head = _bridge(rng, start, np.log(up / prev_close), m + 1, vol)[1:]
        if sealed:
            tail = np.full(minutes - m - 1, np.log(up / prev_close))
        else:
            tail = _bridge(rng, np.log(up / prev_close), np.log(day_close / prev_close), minutes - m - 1, vol)[1:]
        closes = round_to_tick(prev_close * np.exp(np.concatenate([head, tail])), tick)
        closes[:m] = np.clip(closes[:m], down, up - tick)
        closes[m:] = np.clip(closes[m:], down, up)
        closes[m] = up
        if sealed:
            closes[m:] = up
        cap = np.where(np.arange(minutes) < m, up - tick, up)
    closes[-1] = day_close

    opens = np.concatenate([[day_open], closes[:-1]])
    top = np.maximum(opens, closes)
    bottom = np.minimum(opens, closes)
    wiggle = vol * 0.5
    highs = np.maximum(np.minimum(round_to_tick(top * (1.0 + np.abs(rng.normal(0.0, wiggle, minutes))), tick), cap), top)
    lows = np.minimum(np.maximum(round_to_tick(bottom * (1.0 - np.abs(rng.normal(0.0, wiggle, minutes))), tick), down), bottom)
    return {"open": opens, "high": highs, "low": lows, "close": closes}


def generate_synthetic(config: SyntheticConfig | None = None) -> SyntheticMarket:
    """
    Generates daily bars, minute bars and an industry map.

    Every stock draws from its own random stream derived from (seed, stock
    index), and minute paths from a second per-stock stream, so the curb
    events and their labels do not depend on which stock-days get minute
    bars.

    Args:
        config: Generator settings, defaults to SyntheticConfig()

    Returns:
        A SyntheticMarket

    Raises:
        GeneratorConfigError: No curb events within the first 100 days
    """

    config = config or SyntheticConfig()
    tick = config.tick
    stock_ids = _ids("S", config.n_stocks, 3)
    industry_names = _ids("IND", config.n_industries, 2)
    industry_of = np.arange(config.n_stocks) % config.n_industries

    market, factors = _factor_paths(config)
    draws = [_draw_stock(config, i, market, factors[:, industry_of[i]]) for i in range(config.n_stocks)]
    touched, sealed = _seal_flags(config, draws, factors, industry_of)

    early = touched[:, :FEASIBILITY_DAYS].sum()
    if early == 0:
        raise GeneratorConfigError(
            f"No curb events in the first {FEASIBILITY_DAYS} days; increase industry_vol or idio_vol"
        )

    daily_rows: list[tuple] = []
    minute_frames: list[pd.DataFrame] = []
    for i, stock_id in enumerate(stock_ids):
        d = draws[i]
        minute_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 2, i]))
        prev_close = d.initial_price
        for t in range(config.n_days):
            up = float(curb_price(prev_close, config.limit_rate, tick))
            down = float(round_to_tick(prev_close * (1.0 - config.limit_rate), tick))
            r, gap = d.returns[t], d.gaps[t]

            day_open = float(np.clip(round_to_tick(prev_close * np.exp(gap), tick), down + tick, up - tick))
            if touched[i, t]:
                if sealed[i, t]:
                    close = up
                else:
                    close = min(float(round_to_tick(prev_close * np.exp(r), tick)), float(round_to_tick(up * (1.0 - d.fallback[t]), tick)))
                    close = float(np.clip(close, down, up - tick))
                high = up
            else:
                close = float(np.clip(round_to_tick(prev_close * np.exp(r), tick), down, up - tick))
                high = float(round_to_tick(prev_close * np.exp(max(gap, r) + d.up_excursion[t]), tick))
                high = min(max(high, day_open, close), up - tick)
            low = float(round_to_tick(prev_close * np.exp(min(gap, r) - d.down_excursion[t]), tick))
            low = max(min(low, day_open, close), down)

            if touched[i, t] or config.minute_bars == "all_days":
                bars = _minute_path(
                    minute_rng,
                    config,
                    prev_close,
                    day_open,
                    close,
                    int(d.touch_minute[t]) if touched[i, t] else None,
                    bool(sealed[i, t]),
                )
                weights = minute_rng.dirichlet(np.full(config.minutes_per_day, 2.0))
                volumes = minute_rng.multinomial(int(d.volume[t]), weights)
                high, low = float(bars["high"].max()), float(bars["low"].min())
                minute_frames.append(
                    pd.DataFrame(
                        {
                            "stock_id": stock_id,
                            "day": t,
                            "minute": np.arange(config.minutes_per_day),
                            **bars,
                            "volume": volumes.astype(np.float64),
                        }
                    )
                )

            daily_rows.append((stock_id, t, day_open, high, low, close, float(d.volume[t]), d.float_shares))
            prev_close = close

    daily = pd.DataFrame(daily_rows, columns=DAILY_COLUMNS)
    daily["day"] = daily["day"].astype(np.int64)
    minute = (
        pd.concat(minute_frames, ignore_index=True)[MINUTE_COLUMNS]
        if minute_frames
        else pd.DataFrame(columns=MINUTE_COLUMNS)
    )

    rate = touched.sum() / touched.size
    low, high = config.target_event_rate
    if not low <= rate <= high:
        logger.warning(f"Curb event rate {rate:.4f} outside target band [{low}, {high}]")
    logger.info(
        f"Generated {config.n_stocks} stocks x {config.n_days} days: {int(touched.sum())} curb events, "
        f"{int(sealed.sum())} sealed, event rate {rate:.4f}"
    )

    return SyntheticMarket(
        daily=daily,
        minute=minute,
        industries={stock_id: industry_names[industry_of[i]] for i, stock_id in enumerate(stock_ids)},
        industry_factors=factors,
        industry_names=tuple(industry_names),
        n_touched=int(touched.sum()),
    )
