"""Artifact renderers for the cocycle laboratory."""

from .svg import emit_svg

__all__ = [
    "emit_svg",
]
