from pathlib import Path
import logging, os, sys

from logging.handlers import RotatingFileHandler
from datetime import datetime


# constants for logging
LOG_DIR = os.getenv("POLYDISC_LOG_DIR", "logs")
LOG_FILE = f"{datetime.now().strftime('%d_%m_%Y_%H_%M')}.log"
MAX_LOG_SIZE = 5*1024*1024        # 5mb
BACKUP_COUNT = 5                  # rotated files kept on disk


# construct log file path
current_file_path = Path(__file__)
root_dir = current_file_path.parent.parent.parent.resolve()     # src/logger/__init__.py -> repo root
log_dir_path = root_dir / LOG_DIR                               # absolute LOG_DIR wins over root_dir


def setup_logging():
    """Logging module with RotatingFileHandler and consolehandler"""

    # One named logger for the whole package
    logger = logging.getLogger("polydisc_dilation")

    # Prevent adding handlers multiple times if module is imported again
    if logger.handlers:
        return logger

    logger.setLevel(logging.DEBUG)

    # Format: Time | Level | File:Line | Message
    formatter = logging.Formatter(
        "[%(asctime)s] | %(levelname)s | %(filename)s:%(lineno)d | %(message)s"
    )

    os.makedirs(log_dir_path, exist_ok=True)

    log_file_path = log_dir_path / LOG_FILE

    # Rotating file handler to delete old logs and save the disk space
    file_handler = RotatingFileHandler(
        log_file_path,
        maxBytes=MAX_LOG_SIZE,
        backupCount=BACKUP_COUNT,
        encoding='utf-8'
    )
    file_handler.setFormatter(formatter)
    file_handler.setLevel(logging.INFO)

    # Console handler; reports go to stdout, diagnostics to stderr
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    console_handler.setLevel(logging.INFO)

    logger.addHandler(file_handler)
    logger.addHandler(console_handler)

    return logger


# Initialize logger when module is imported
# Other modules should: from src.logger import logger
logger = setup_logging()
