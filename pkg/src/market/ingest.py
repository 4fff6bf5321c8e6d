"""
CSV ingestion for daily bars, minute bars and industry labels.

Loaders return pandas frames sorted by (stock_id, day[, minute]); row-level
pydantic models are available through `daily_bars_from_frame` and
`minute_bars_from_frame` when individual objects are needed.
"""

import logging
from pathlib import Path
from typing import Iterable

import numpy as np
import pandas as pd

from src.core.errors import DataIntegrityError, SchemaError
from .bars import DAILY_COLUMNS, INDUSTRY_COLUMNS, MINUTE_COLUMNS

logger = logging.getLogger(__name__)

INTEGER_COLUMNS = {"day", "minute"}


def _read(path: str | Path, columns: list[str]) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"Missing file: {path}")

    with open(path, encoding="utf-8") as handle:
        header = handle.readline().rstrip("\r\n").split(",")
    if header != columns:
        raise SchemaError(f"{path}: header {header} does not match expected columns {columns}")

    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.ParserError as e:
        raise SchemaError(f"{path}: malformed row: {e}")
    return frame


def _line(position: int) -> int:
    # header is line 1
    return int(position) + 2


def _to_numeric(frame: pd.DataFrame, path: Path | str, numeric: Iterable[str]) -> pd.DataFrame:
    out = frame.copy()
    for column in numeric:
        values = pd.to_numeric(out[column].str.strip(), errors="coerce")
        bad = np.flatnonzero(~np.isfinite(values.to_numpy(dtype=np.float64, na_value=np.nan)))
        if bad.size:
            raise SchemaError(
                f"{path}: malformed value in column '{column}' at line {_line(bad[0])}: '{frame[column].iloc[bad[0]]}'"
            )
        if column in INTEGER_COLUMNS:
            fractional = np.flatnonzero(values.to_numpy() != np.floor(values.to_numpy()))
            if fractional.size:
                raise SchemaError(f"{path}: column '{column}' must be an integer at line {_line(fractional[0])}")
            values = values.astype(np.int64)
        else:
            values = values.astype(np.float64)
        out[column] = values
    return out


def _check_bars(frame: pd.DataFrame, path: Path | str, keys: list[str]) -> None:
    empty_id = np.flatnonzero(frame["stock_id"].str.len().to_numpy() == 0)
    if empty_id.size:
        raise SchemaError(f"{path}: empty stock_id at line {_line(empty_id[0])}")

    o, h, l, c = (frame[col].to_numpy() for col in ("open", "high", "low", "close"))
    violations = {
        "non-positive price": (o <= 0) | (h <= 0) | (l <= 0) | (c <= 0),
        "low above min(open, close)": l > np.minimum(o, c),
        "high below max(open, close)": h < np.maximum(o, c),
        "negative volume": frame["volume"].to_numpy() < 0,
        "negative index": frame["day"].to_numpy() < 0,
    }
    if "float_shares" in frame:
        violations["non-positive float_shares"] = frame["float_shares"].to_numpy() <= 0
    if "minute" in frame:
        violations["negative index"] |= frame["minute"].to_numpy() < 0

    for reason, mask in violations.items():
        rows = np.flatnonzero(mask)
        if rows.size:
            raise DataIntegrityError(f"{path}: {reason} at line {_line(rows[0])}")

    duplicated = np.flatnonzero(frame.duplicated(subset=keys).to_numpy())
    if duplicated.size:
        raise DataIntegrityError(f"{path}: duplicate {tuple(keys)} at line {_line(duplicated[0])}")


def load_daily_csv(path: str | Path) -> pd.DataFrame:
    """
    Loads daily bars with header `stock_id,day,open,high,low,close,volume,float_shares`.

    Returns a frame rather than records; `daily_bars_from_frame` turns it into
    `DailyBar` records, one per row and in the same order.

    Args:
        path: CSV file path

    Returns:
        A frame with DAILY_COLUMNS sorted by (stock_id, day), one row per DailyBar

    Raises:
        SchemaError: Missing file, wrong header or malformed value (line number reported)
        DataIntegrityError: Price ordering, volume or float violations
    """

    frame = _to_numeric(_read(path, DAILY_COLUMNS), path, DAILY_COLUMNS[1:])
    _check_bars(frame, path, ["stock_id", "day"])
    frame = frame.sort_values(["stock_id", "day"], kind="mergesort").reset_index(drop=True)
    logger.info(f"Loaded {len(frame)} daily bars from {path}")
    return frame


def load_minute_csv(path: str | Path) -> pd.DataFrame:
    """
    Loads minute bars with header `stock_id,day,minute,open,high,low,close,volume`.

    Returns a frame sorted by (stock_id, day, minute); `minute_bars_from_frame`
    gives the matching `MinuteBar` records.
    """

    frame = _to_numeric(_read(path, MINUTE_COLUMNS), path, MINUTE_COLUMNS[1:])
    _check_bars(frame, path, ["stock_id", "day", "minute"])
    frame = frame.sort_values(["stock_id", "day", "minute"], kind="mergesort").reset_index(drop=True)
    logger.info(f"Loaded {len(frame)} minute bars from {path}")
    return frame


def load_industry_csv(path: str | Path, stock_ids: Iterable[str] | None = None) -> dict[str, str]:
    """
    Loads the `stock_id,industry` map.

    Args:
        path: CSV file path
        stock_ids: Stocks present in the price data; each must have an industry

    Returns:
        Mapping stock_id -> industry label

    Raises:
        SchemaError: Missing file or wrong header
        DataIntegrityError: Conflicting duplicates or stocks without an industry
    """

    frame = _read(path, INDUSTRY_COLUMNS)
    mapping: dict[str, str] = {}
    for position, (stock_id, industry) in enumerate(zip(frame["stock_id"], frame["industry"])):
        stock_id, industry = stock_id.strip(), industry.strip()
        if not stock_id or not industry:
            raise SchemaError(f"{path}: empty field at line {_line(position)}")
        previous = mapping.get(stock_id)
        if previous is not None and previous != industry:
            raise DataIntegrityError(
                f"{path}: stock '{stock_id}' has conflicting industries '{previous}' and '{industry}' (line {_line(position)})"
            )
        mapping[stock_id] = industry

    if stock_ids is not None:
        missing = sorted(set(stock_ids) - set(mapping))
        if missing:
            raise DataIntegrityError(f"{path}: stocks without an industry: {missing}")

    logger.info(f"Loaded industries for {len(mapping)} stocks from {path}")
    return mapping
