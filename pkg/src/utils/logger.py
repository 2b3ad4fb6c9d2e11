"""Logging configuration for the toolkit."""

import logging
import sys
from pathlib import Path
from typing import Optional

from src.config import settings

CONSOLE_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"
FILE_FORMAT = (
    "%(asctime)s | %(levelname)-8s | %(name)s | %(funcName)s:%(lineno)d | %(message)s"
)
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

# run logs attach here so every src.* module logger feeds them
PACKAGE_LOGGER = "src"


def setup_logger(
    name: str, level: Optional[str] = None, log_file: Optional[Path] = None
) -> logging.Logger:
    """
    Configure and return a logger instance.

    Args:
        name: Logger name (typically __name__)
        level: Logging level (defaults to settings.LOG_LEVEL)
        log_file: Optional file path for file logging

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)

    # package loggers inherit level and handlers from the "src" logger
    if name.startswith(PACKAGE_LOGGER + "."):
        setup_logger(PACKAGE_LOGGER)
        if level:
            logger.setLevel(getattr(logging, level.upper()))
        if log_file and not logger.handlers:
            logger.addHandler(_file_handler(log_file))
        return logger

    log_level = level or settings.LOG_LEVEL
    logger.setLevel(getattr(logging, log_level.upper()))

    # avoid duplicate handlers
    if logger.handlers:
        return logger

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(getattr(logging, log_level.upper()))
    console_handler.setFormatter(logging.Formatter(fmt=CONSOLE_FORMAT, datefmt=DATE_FORMAT))
    logger.addHandler(console_handler)

    if log_file:
        logger.addHandler(_file_handler(log_file))

    return logger


def _file_handler(log_file: Path) -> logging.FileHandler:
    log_file.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(log_file, mode="w", encoding="utf-8")
    handler.setLevel(logging.DEBUG)
    handler.setFormatter(logging.Formatter(fmt=FILE_FORMAT, datefmt=DATE_FORMAT))
    return handler


def get_logger(name: str) -> logging.Logger:
    """
    Get or create a logger with default configuration.

    Args:
        name: Logger name (typically __name__)

    Returns:
        Logger instance
    """
    return setup_logger(name)


def attach_run_log(log_file: Path) -> logging.Handler:
    """
    Route every package log record into a per-run log file.

    Args:
        log_file: Destination file, truncated on attach

    Returns:
        The handler, to be passed to detach_run_log when the run ends
    """
    package_logger = setup_logger(PACKAGE_LOGGER)
    handler = _file_handler(log_file)
    package_logger.addHandler(handler)
    # DEBUG records reach the file even when the console is at INFO
    package_logger.setLevel(logging.DEBUG)
    return handler


def detach_run_log(handler: logging.Handler) -> None:
    """Remove and close a handler installed by attach_run_log."""
    package_logger = logging.getLogger(PACKAGE_LOGGER)
    package_logger.removeHandler(handler)
    handler.close()
    package_logger.setLevel(getattr(logging, settings.LOG_LEVEL.upper()))
