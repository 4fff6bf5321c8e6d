from .bars import (
    DAILY_COLUMNS,
    MINUTE_COLUMNS,
    INDUSTRY_COLUMNS,
    INDICATOR_NAMES,
    DailyBar,
    MinuteBar,
    CurbEvent,
    IndicatorVector,
    SampleWindow,
)
from .ingest import load_daily_csv, load_minute_csv, load_industry_csv
from .curb import curb_price, detect_curb_events, compute_curb_indicators, compute_event_indicators
from .windows import FEATURE_NAMES, DaySample, Dataset, build_windows, normalize, temporal_split, split_days
from .synthetic import SyntheticConfig, SyntheticMarket, generate_synthetic
from .corpus import DataConfig, Corpus, load_corpus, prepare_dataset, write_corpus, corpus_from_market

__all__ = [
    "DAILY_COLUMNS",
    "MINUTE_COLUMNS",
    "INDUSTRY_COLUMNS",
    "INDICATOR_NAMES",
    "DailyBar",
    "MinuteBar",
    "CurbEvent",
    "IndicatorVector",
    "SampleWindow",
    "load_daily_csv",
    "load_minute_csv",
    "load_industry_csv",
    "curb_price",
    "detect_curb_events",
    "compute_curb_indicators",
    "compute_event_indicators",
    "FEATURE_NAMES",
    "DaySample",
    "Dataset",
    "build_windows",
    "normalize",
    "temporal_split",
    "split_days",
    "SyntheticConfig",
    "SyntheticMarket",
    "generate_synthetic",
    "DataConfig",
    "Corpus",
    "load_corpus",
    "prepare_dataset",
    "write_corpus",
    "corpus_from_market",
]
