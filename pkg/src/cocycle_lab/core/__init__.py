"""Core functionality for the cocycle laboratory."""

from .engine import LabEngine, RunContext, RunOutcome
from .models import RotationVector, TorusPartition

__all__ = [
    "LabEngine",
    "RunContext",
    "RunOutcome",
    "RotationVector",
    "TorusPartition",
]
