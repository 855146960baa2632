"""Centralized logging configuration for slising.

This module provides a standardized logger with consistent formatting across
the computational core and the command-line runner.
"""

import logging
import os
import sys
from pathlib import Path


class LoggerConfig:
    """Configure and manage application logging."""

    # Aligned fields including logger name and function
    LOG_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)-24s | %(funcName)-26s | %(message)s"
    DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

    # Log file location, overridable with SLISING_LOG_DIR
    LOG_DIR = Path(__file__).parent.parent.parent  # Project root
    LOG_FILE_NAME = "slising.log"

    _configured = False
    _console_handler: logging.Handler | None = None

    @classmethod
    def log_file(cls) -> Path:
        """Return the log file path, honouring SLISING_LOG_DIR."""
        log_dir = os.getenv("SLISING_LOG_DIR")
        return (Path(log_dir) if log_dir else cls.LOG_DIR) / cls.LOG_FILE_NAME

    @classmethod
    def configure(cls, level: int = logging.INFO) -> None:
        """
        Configure the root logger with standardized formatting.

        Args:
            level: Logging level for console output (default: INFO)
        """
        if cls._configured:
            return

        formatter = logging.Formatter(fmt=cls.LOG_FORMAT, datefmt=cls.DATE_FORMAT)

        # Console handler (stderr keeps stdout free for command output)
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(level)
        console_handler.setFormatter(formatter)

        root_logger = logging.getLogger()
        root_logger.setLevel(logging.DEBUG)  # Capture all levels
        root_logger.addHandler(console_handler)

        # File handler, skipped when the directory is not writable
        try:
            file_handler = logging.FileHandler(cls.log_file(), mode="a", encoding="utf-8")
            file_handler.setLevel(logging.DEBUG)
            file_handler.setFormatter(formatter)
            root_logger.addHandler(file_handler)
        except OSError as e:
            root_logger.warning(f"File logging disabled: {e}")

        cls._console_handler = console_handler
        cls._configured = True

    @classmethod
    def set_console_level(cls, level: int) -> None:
        """Change the console verbosity after configuration (used by ``--verbose``)."""
        cls.configure(level=level)
        if cls._console_handler is not None:
            cls._console_handler.setLevel(level)


def get_logger(name: str, level: int | None = None) -> logging.Logger:
    """
    Get a configured logger for a module.

    Args:
        name: Logger name (typically __name__ from calling module)
        level: Minimum logging level for console output; defaults to SLISING_LOG_LEVEL or INFO

    Returns:
        Configured logger instance

    Example:
        >>> from config import get_logger
        >>> logger = get_logger(__name__)
        >>> logger.info("Enumeration started")
        >>> logger.debug("Detailed debug information")
    """
    if level is None:
        level_name = os.getenv("SLISING_LOG_LEVEL", "INFO").upper()
        # getLevelNamesMapping() is 3.11+; _nameToLevel is the same mapping on 3.10
        level_names = getattr(logging, "getLevelNamesMapping", lambda: dict(logging._nameToLevel))()
        level = level_names.get(level_name, logging.INFO)

    # Configure logging on first use
    LoggerConfig.configure(level=level)

    return logging.getLogger(name)
