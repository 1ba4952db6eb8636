import json
import logging

import pytest

from config_helper import db_to_linear, dbm_to_watts, load_config_file
from errors import InvalidParameterError
from log_helper import setup_logging


def test_dbm_to_watts():
    assert dbm_to_watts(10) == pytest.approx(0.01, rel=1e-12)
    assert dbm_to_watts(-70) == pytest.approx(1e-10, rel=1e-12)
    assert dbm_to_watts(30) == pytest.approx(1.0, rel=1e-12)


def test_db_to_linear():
    assert db_to_linear(10) == pytest.approx(10.0, rel=1e-12)
    assert db_to_linear(0) == 1.0


def test_config_file_normalizes_option_names(tmp_path):
    path = tmp_path / "cbct.json"
    path.write_text(json.dumps({"disk": {"b0": 4, "grid-count": 50}, "gain": {"packet-length": 20}}))
    assert load_config_file(path) == {"disk": {"b0": 4, "grid_count": 50}, "gain": {"packet_length": 20}}


@pytest.mark.parametrize("content", ["{not json", "[1, 2]", '{"disk": 3}'])
def test_config_file_rejects_bad_content(tmp_path, content):
    path = tmp_path / "bad.json"
    path.write_text(content)
    with pytest.raises(InvalidParameterError):
        load_config_file(path)


def test_setup_logging_writes_timestamped_file(tmp_path):
    log_file = setup_logging("DEBUG", tmp_path / "logs")
    logging.getLogger("cbct.test").debug("hello")
    for handler in logging.getLogger().handlers:
        handler.flush()
    assert log_file.name.startswith("cbct_") and log_file.suffix == ".log"
    assert "hello" in log_file.read_text()
    setup_logging("WARNING")


def test_setup_logging_stderr_only():
    assert setup_logging("INFO") is None
    assert logging.getLogger().level == logging.INFO
