"""Logging configuration using loguru.

Console output goes to stderr so that command summaries printed on stdout
stay machine-readable. Records emitted while a command runs carry a ``run``
tag (command and seed) so interleaved suite logs can be told apart.
"""

import sys
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import Any

from loguru import logger

from .config import LoggingConfig

NO_RUN = "-"

_FORMATS = {
    "simple": "<level>{level: <8}</level> | <level>{message}</level>",
    "detailed": (
        "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | "
        "<magenta>{extra[run]}</magenta> | <cyan>{name}</cyan>:<cyan>{line}</cyan> - "
        "<level>{message}</level>"
    ),
}
_FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <8} | {extra[run]} | {name}:{line} - {message}"


def configure_logging(config: LoggingConfig | None = None) -> None:
    """Configure loguru sinks from the ``[logging]`` section.

    Args:
        config: Logging configuration. If None, uses default settings.
    """
    if config is None:
        config = LoggingConfig()

    logger.remove()
    logger.configure(extra={"run": NO_RUN})

    if config.console_output:
        logger.add(
            sys.stderr,
            level=config.level,
            format=_FORMATS[config.format],
            colorize=True,
        )

    if config.file:
        log_path = Path(config.file)
        log_path.parent.mkdir(parents=True, exist_ok=True)

        logger.add(
            config.file,
            level=config.level,
            format=_FILE_FORMAT,
            rotation=config.max_size,
            retention=config.backup_count,
            compression="zip",
            encoding="utf-8",
        )


def get_logger(name: str) -> Any:
    """Logger bound to a module name."""
    return logger.bind(module=name)


@contextmanager
def run_context(command: str, seed: int) -> Iterator[None]:
    """Tag every record emitted inside the block with ``command#seed``."""
    with logger.contextualize(run=f"{command}#{seed}"):
        yield


def log_duration(operation: str, duration: float) -> None:
    """Log operation duration.

    Args:
        operation: Name of the operation
        duration: Duration in seconds
    """
    unit = f"{duration * 1000:.1f} ms" if duration < 1 else f"{duration:.2f} s"
    logger.info(f"{operation} completed in {unit}")


__all__ = [
    "NO_RUN",
    "logger",
    "configure_logging",
    "get_logger",
    "log_duration",
    "run_context",
]
