"""CLI modules for the cocycle laboratory."""

from .commands import create_cli

__all__ = [
    "create_cli",
]
