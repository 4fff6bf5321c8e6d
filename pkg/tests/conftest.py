import numpy as np
import pytest

from src.market.corpus import DataConfig, corpus_from_market, write_corpus
from src.market.synthetic import SyntheticConfig, generate_synthetic
from src.model import HgnnConfig, BaselineConfig
from src.training import TrainConfig, prepare_data


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def small_synthetic_config() -> SyntheticConfig:
    return SyntheticConfig(n_stocks=40, n_industries=8, n_days=200, minutes_per_day=60, seed=11)


@pytest.fixture(scope="session")
def small_market(small_synthetic_config):
    return generate_synthetic(small_synthetic_config)


@pytest.fixture(scope="session")
def small_corpus(small_market):
    return corpus_from_market(small_market)


@pytest.fixture(scope="session")
def data_config() -> DataConfig:
    return DataConfig(lookback=5, minutes_per_day=60)


@pytest.fixture(scope="session")
def small_data(small_corpus, data_config):
    return prepare_data(small_corpus, data_config)


@pytest.fixture(scope="session")
def small_hgnn() -> HgnnConfig:
    return HgnnConfig(lookback=5, hidden=4, attention_dim=3, mlp_hidden_dims=[4])


@pytest.fixture(scope="session")
def small_baseline() -> BaselineConfig:
    return BaselineConfig(hidden=4)


@pytest.fixture(scope="session")
def quick_train() -> TrainConfig:
    return TrainConfig(epochs=2, patience=2, learning_rate=1e-2, seeds=[1, 2])


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory, small_market, small_synthetic_config):
    out = tmp_path_factory.mktemp("corpus") / "data"
    write_corpus(small_market, out, small_synthetic_config)
    return out
