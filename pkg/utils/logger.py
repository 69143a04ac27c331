"""Process-wide logging for kinward.

Diagnostics always go to stderr: stdout carries command output such as
lambda values and summary tables, which callers pipe into other tools.
"""

import logging
import logging.handlers
import sys
from pathlib import Path
from typing import Dict, Optional, Union

ROOT_LOGGER = "kinward"
DEFAULT_FORMAT = "%(asctime)s %(levelname)-8s %(name)s: %(message)s"
MAX_LOG_BYTES = 10 * 1024 * 1024

Level = Union[str, int]


def resolve_level(level: Level) -> int:
    """Numeric level for a name such as ``"debug"``; unknown names raise ValueError."""
    if isinstance(level, int):
        return level
    resolved = logging.getLevelName(str(level).upper())
    if not isinstance(resolved, int):
        raise ValueError(f"Unknown log level '{level}'")
    return resolved


def verbosity_level(verbose: bool, quiet: bool, default: Level = "INFO") -> int:
    """Level chosen by the -v / -q command-line switches."""
    if verbose and quiet:
        raise ValueError("--verbose and --quiet are mutually exclusive")
    if verbose:
        return logging.DEBUG
    if quiet:
        return logging.WARNING
    return resolve_level(default)


class LoggerFactory:
    _loggers: Dict[str, logging.Logger] = {}

    @classmethod
    def get_logger(
        cls,
        name: str = ROOT_LOGGER,
        log_level: Level = "INFO",
        log_to_file: bool = False,
        log_file_path: Optional[str] = None,
        log_format: str = DEFAULT_FORMAT,
        backup_count: int = 5,
    ) -> logging.Logger:
        if name in cls._loggers:
            return cls._loggers[name]

        logger = logging.getLogger(name)
        logger.handlers.clear()
        logger.propagate = False

        formatter = logging.Formatter(log_format)
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

        try:
            logger.setLevel(resolve_level(log_level))
        except ValueError as e:
            logger.setLevel(logging.INFO)
            logger.warning("%s; logging at INFO", e)

        if log_to_file:
            cls._attach_file(logger, name, log_file_path, formatter, backup_count)

        cls._loggers[name] = logger
        return logger

    @staticmethod
    def _attach_file(
        logger: logging.Logger,
        name: str,
        log_file_path: Optional[str],
        formatter: logging.Formatter,
        backup_count: int,
    ) -> None:
        try:
            if not log_file_path:
                log_dir = Path("logs")
                log_dir.mkdir(exist_ok=True)
                log_file_path = str(log_dir / f"{name}.log")
            file_handler = logging.handlers.RotatingFileHandler(
                log_file_path, maxBytes=MAX_LOG_BYTES, backupCount=backup_count
            )
        except OSError as e:
            logger.warning("File logging disabled: %s", e)
            return
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    @classmethod
    def set_level(cls, log_level: Level) -> None:
        level = resolve_level(log_level)
        for logger in cls._loggers.values():
            logger.setLevel(level)
