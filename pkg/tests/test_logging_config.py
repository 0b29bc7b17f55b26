"""Tests for logging setup and the metric line format."""

import logging

import pytest

from causal_explainer.utils.logging_config import STEP_LOGGERS, format_metrics, setup_logging


@pytest.fixture(autouse=True)
def restore_logging():
    yield
    for name in STEP_LOGGERS:
        logging.getLogger(name).setLevel(logging.NOTSET)
    logging.basicConfig(force=True, handlers=[logging.NullHandler()])


def test_format_metrics():
    assert format_metrics({"C": 0.69314, "D": -1.0, "K": 1}) == "C=0.6931 D=-1.0000 K=1"
    assert format_metrics({"lambda": "0.08", "C": 0.5}, precision=2) == "lambda=0.08 C=0.50"
    assert format_metrics({}) == ""


def test_log_file_in_new_directory(tmp_path):
    log_file = tmp_path / "logs" / "nested" / "run.log"
    setup_logging("INFO", str(log_file))
    logging.getLogger("causal_explainer.test").info("hello from the test")
    logging.getLogger("causal_explainer.test").debug("hidden at INFO")
    for handler in logging.getLogger().handlers:
        handler.flush()
    text = log_file.read_text()
    assert "causal_explainer.test - INFO - hello from the test" in text
    assert "hidden at INFO" not in text


def test_quiet_steps_silences_progress_loggers():
    setup_logging("DEBUG", quiet_steps=True)
    assert all(logging.getLogger(name).level == logging.WARNING for name in STEP_LOGGERS)
    assert logging.getLogger().level == logging.DEBUG
    setup_logging("INFO")
    assert all(logging.getLogger(name).level == logging.NOTSET for name in STEP_LOGGERS)
