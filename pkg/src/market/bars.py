from typing import Self

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, model_validator

DAILY_COLUMNS = ["stock_id", "day", "open", "high", "low", "close", "volume", "float_shares"]
MINUTE_COLUMNS = ["stock_id", "day", "minute", "open", "high", "low", "close", "volume"]
INDUSTRY_COLUMNS = ["stock_id", "industry"]

INDICATOR_NAMES = ("moving_average_ratio", "rate_of_change", "turnover_rate", "amplitude", "deviation_rate")


def _check_price_order(open_: float, high: float, low: float, close: float) -> None:
    if not (low <= min(open_, close) and max(open_, close) <= high):
        raise ValueError(f"Price ordering violated: open={open_}, high={high}, low={low}, close={close}")


class DailyBar(BaseModel):
    """One trading day of one stock."""

    stock_id: str = Field(..., min_length=1, description="Stock identifier")
    day: int = Field(..., ge=0, description="Trading day index")
    open: float = Field(..., gt=0.0, description="Opening price")
    high: float = Field(..., gt=0.0, description="Highest price")
    low: float = Field(..., gt=0.0, description="Lowest price")
    close: float = Field(..., gt=0.0, description="Closing price")
    volume: float = Field(..., ge=0.0, description="Shares traded")
    float_shares: float = Field(..., gt=0.0, description="Shares available to trade")

    @model_validator(mode="after")
    def _price_order(self) -> Self:
        _check_price_order(self.open, self.high, self.low, self.close)
        return self


class MinuteBar(BaseModel):
    """One minute of one stock on one day."""

    stock_id: str = Field(..., min_length=1, description="Stock identifier")
    day: int = Field(..., ge=0, description="Trading day index")
    minute: int = Field(..., ge=0, description="Minute index within the day")
    open: float = Field(..., gt=0.0)
    high: float = Field(..., gt=0.0)
    low: float = Field(..., gt=0.0)
    close: float = Field(..., gt=0.0)
    volume: float = Field(..., ge=0.0)

    @model_validator(mode="after")
    def _price_order(self) -> Self:
        _check_price_order(self.open, self.high, self.low, self.close)
        return self


class CurbEvent(BaseModel):
    """
    A stock-day whose high touched the upper curb price.

    Attributes:
        label: 1 for Type I (closed at the curb), 0 for Type II (fell back)
    """

    stock_id: str
    day: int = Field(..., ge=1)
    prev_close: float = Field(..., gt=0.0, description="Previous trading day close")
    curb_price: float = Field(..., gt=0.0, description="prev_close * (1 + limit_rate) rounded to tick")
    close: float = Field(..., gt=0.0, description="Close of the event day")
    touched_minute: int = Field(..., ge=0, description="First minute whose high reached the curb")
    label: int = Field(..., ge=0, le=1)


class IndicatorVector(BaseModel):
    """Minute-derived indicators at the touch minute (the vector d of a curb stock)."""

    moving_average_ratio: float
    rate_of_change: float
    turnover_rate: float = Field(..., ge=0.0)
    amplitude: float = Field(..., ge=0.0)
    deviation_rate: float

    @model_validator(mode="after")
    def _finite(self) -> Self:
        if not np.all(np.isfinite(self.as_array())):
            raise ValueError(f"Indicator vector has non-finite entries: {self.as_array().tolist()}")
        return self

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in INDICATOR_NAMES], dtype=np.float64)

    @classmethod
    def from_array(cls, values: np.ndarray) -> "IndicatorVector":
        return cls(**{name: float(v) for name, v in zip(INDICATOR_NAMES, values)})


class SampleWindow(BaseModel):
    """
    One (stock, day) sample: the lookback features and, for curb stocks, indicators and label.
    """

    stock_id: str
    day: int
    features: list[list[float]] = Field(..., description="T x F lookback matrix")
    indicators: IndicatorVector | None = Field(default=None, description="Present iff curb stock that day")
    label: int | None = Field(default=None, ge=0, le=1, description="Present iff curb stock that day")
    node_index: int = Field(..., ge=0, description="Row of the stock in the industry graph")

    @model_validator(mode="after")
    def _label_iff_indicators(self) -> Self:
        if (self.label is None) != (self.indicators is None):
            raise ValueError("label and indicators must be both present or both absent")
        widths = {len(row) for row in self.features}
        if len(widths) > 1:
            raise ValueError(f"Ragged feature rows: widths {sorted(widths)}")
        return self


def daily_bars_from_frame(frame: pd.DataFrame) -> list[DailyBar]:
    return [DailyBar(**row) for row in frame[DAILY_COLUMNS].to_dict(orient="records")]


def minute_bars_from_frame(frame: pd.DataFrame) -> list[MinuteBar]:
    return [MinuteBar(**row) for row in frame[MINUTE_COLUMNS].to_dict(orient="records")]
