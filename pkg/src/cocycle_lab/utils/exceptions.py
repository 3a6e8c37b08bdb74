"""Custom exceptions for the cocycle laboratory.

This module defines the exception hierarchy used throughout the package.
Each class carries the process exit code the command-line runner reports
when the error escapes a command.
"""

from __future__ import annotations

from collections.abc import Sequence


class CocycleLabError(Exception):
    """Base exception class for all laboratory errors."""

    exit_code: int = 1


class ConfigurationError(CocycleLabError):
    """Invalid settings, parameters or run configuration."""

    exit_code = 2


class RationalInputError(ConfigurationError):
    """A value expected to be irrational turned out to be rational.

    ``suspected`` is True when the verdict comes from a huge partial
    quotient of a decimal literal rather than from exact arithmetic.
    """

    def __init__(self, message: str, suspected: bool = False) -> None:
        super().__init__(message)
        self.suspected = suspected


class DepthError(ConfigurationError):
    """A convergent table is too shallow for the requested operation."""


class DegeneracyError(CocycleLabError):
    """Near-coincident geometry or orbit points at working precision."""

    exit_code = 3

    def __init__(self, message: str, indices: Sequence[object] = ()) -> None:
        super().__init__(message)
        self.indices = tuple(indices)


class BoundaryHitError(DegeneracyError):
    """A point lies within tolerance of a discontinuity line."""


class CodingAmbiguityError(DegeneracyError):
    """Interior samples of one partition cell produced different codings."""


class PrecisionError(CocycleLabError):
    """Working precision is insufficient for a certified answer."""

    exit_code = 4


class ResonanceError(PrecisionError):
    """A small divisor ‖h·α‖ fell below the resonance guard."""


class CriterionFailure(CocycleLabError):
    """An acceptance criterion did not hold."""

    exit_code = 5


class SamplingError(CocycleLabError):
    """No admissible sample could be constructed."""


class ReturnTimeoutError(CocycleLabError):
    """An orbit did not return to the base set within the cap."""


class InconsistentPiecesError(CocycleLabError):
    """Piece evaluators of a map disagree with each other or with quadrature."""
