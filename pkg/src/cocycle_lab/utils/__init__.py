"""Utility modules for the cocycle laboratory."""

from .config import Config, RunConfig, get_settings
from .logging import configure_logging

__all__ = [
    "get_settings",
    "Config",
    "RunConfig",
    "configure_logging",
]
