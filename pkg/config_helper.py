import os
import json
from dotenv import load_dotenv

from errors import InvalidParameterError

# Load .env from parent directory, then a local one
load_dotenv(os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), '.env'))
load_dotenv(os.path.join(os.path.dirname(os.path.abspath(__file__)), '.env'))

VERSION = "0.3.0"

LOG_LEVEL = os.getenv("CBCT_LOG_LEVEL", "INFO")
LOG_DIR = os.getenv("CBCT_LOG_DIR")
DEFAULT_SEED = int(os.getenv("CBCT_SEED", "1"))
DEFAULT_WORKERS = int(os.getenv("CBCT_WORKERS", "1"))
MC_CHUNK = int(os.getenv("CBCT_MC_CHUNK", "256"))
LP_TRACE = os.getenv("CBCT_LP_TRACE")


def dbm_to_watts(dbm):
    """10 dBm -> 0.01 W"""
    return 10.0 ** (dbm / 10.0) / 1000.0


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


def load_config_file(path):
    """Read a JSON config of the form {"<subcommand>": {"<option>": value}}.

    Option names may use dashes or underscores; they are normalized to the
    underscore form click uses for parameter names.
    """
    with open(path) as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as e:
            raise InvalidParameterError(f"Config file {path} is not valid JSON: {e}")

    if not isinstance(raw, dict):
        raise InvalidParameterError(f"Config file {path} must hold a JSON object")

    config = {}
    for command, options in raw.items():
        if not isinstance(options, dict):
            raise InvalidParameterError(f"Config section '{command}' must be an object")
        config[command] = {key.replace('-', '_'): value for key, value in options.items()}
    return config
