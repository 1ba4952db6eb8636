import sys
import logging
from datetime import datetime
from pathlib import Path

LOG_FORMAT = '[%(asctime)s] [%(levelname)s] %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


def setup_logging(level="INFO", log_dir=None):
    """Configure the root logger for stderr and, optionally, a timestamped file.

    Returns the log file path, or None when only stderr is used.
    """
    handlers = [logging.StreamHandler(sys.stderr)]
    log_filename = None

    if log_dir:
        log_path = Path(log_dir)
        log_path.mkdir(parents=True, exist_ok=True)
        log_filename = log_path / f"cbct_{datetime.now().strftime('%Y%m%d_%H%M%S')}.log"
        handlers.append(logging.FileHandler(log_filename))

    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format=LOG_FORMAT,
        datefmt=DATE_FORMAT,
        handlers=handlers,
        force=True,
    )

    if log_filename:
        logging.info(f"Log file: {log_filename}")
    return log_filename
