"""Numerical laboratory for cocycles over rotations of the torus."""

__version__ = "0.1.0"
__description__ = "Numerical laboratory for cocycles over torus rotations"

from .core.models import RotationVector, TorusPartition

__all__ = [
    "RotationVector",
    "TorusPartition",
    "__version__",
]
