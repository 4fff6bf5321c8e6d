import json
import logging

import pytest

from src.core import (
    AppSession,
    ContractError,
    DivergenceError,
    HgnnError,
    IndexRangeError,
    NoRunsFoundError,
    SchemaError,
    configure_logger,
)
from src.core.io import atomic_write_json, atomic_write_text, canonical_fingerprint, file_sha256


def test_errors_share_root_and_builtin_bases():
    assert issubclass(SchemaError, HgnnError) and issubclass(SchemaError, ValueError)
    assert issubclass(IndexRangeError, IndexError)
    assert issubclass(DivergenceError, RuntimeError)
    assert issubclass(NoRunsFoundError, FileNotFoundError)
    assert issubclass(ContractError, HgnnError)


def test_atomic_write_leaves_no_temp_files(tmp_path):
    target = tmp_path / "nested" / "out.txt"
    atomic_write_text(target, "a,b\n1,2\n")
    assert target.read_text() == "a,b\n1,2\n"
    assert [p.name for p in target.parent.iterdir()] == ["out.txt"]


def test_atomic_write_json_sorted(tmp_path):
    path = atomic_write_json(tmp_path / "x.json", {"b": 1, "a": 2})
    assert json.loads(path.read_text()) == {"a": 2, "b": 1}
    assert path.read_text().index('"a"') < path.read_text().index('"b"')


def test_fingerprint_ignores_key_order():
    first = canonical_fingerprint({"a": 1, "b": [1, 2]})
    second = canonical_fingerprint({"b": [1, 2], "a": 1})
    assert first == second
    assert len(first) == 16
    assert canonical_fingerprint({"a": 2, "b": [1, 2]}) != first


def test_file_sha256_matches_content(tmp_path):
    a = atomic_write_text(tmp_path / "a.txt", "same")
    b = atomic_write_text(tmp_path / "b.txt", "same")
    assert file_sha256(a) == file_sha256(b)


def test_seed_precedence(monkeypatch):
    session = AppSession()
    monkeypatch.delenv("HGNN_SEED", raising=False)
    assert session.resolve_seed(None, 7) == 7
    monkeypatch.setenv("HGNN_SEED", "13")
    assert session.resolve_seed(None, 7) == 13
    assert session.resolve_seed(3, 7) == 3


def test_invalid_seed_env_names_variable(monkeypatch):
    monkeypatch.setenv("HGNN_SEED", "abc")
    with pytest.raises(ValueError, match="HGNN_SEED"):
        AppSession().seed_override


def test_debug_checks_env(monkeypatch):
    monkeypatch.setenv("HGNN_DEBUG_CHECKS", "true")
    assert AppSession().debug_checks
    monkeypatch.setenv("HGNN_DEBUG_CHECKS", "0")
    assert not AppSession().debug_checks


def test_configure_logger_levels():
    root = configure_logger("warning")
    assert root.level == logging.WARNING
    configure_logger("INFO")
    assert len(root.handlers) >= 1
    with pytest.raises(ValueError):
        configure_logger("loud")
