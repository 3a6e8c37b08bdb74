"""High-precision helpers and vectorized orbit kernels.

Irrationals are held as mpmath reals. Orbit points {k·θ} are produced by
fixed-point integer arithmetic so that k·θ is never accumulated by repeated
addition: θ is rounded to 96 fractional bits and k·θ mod 1 is evaluated with
wrapping uint64 words, exact to 2**-64 for |k| < 2**32.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Any

import numpy as np
from mpmath import mp, mpf

DEFAULT_PRECISION_BITS = 256

_SCALE_BITS = 96
_LOW_MASK = (1 << 32) - 1
_MAX_MULTIPLIER = 1 << 32
_ONE_WORD = float(2**64)


def to_mpf(value: Any) -> Any:
    """Convert ints, floats, strings, Fractions and surds to an mpmath real."""
    if isinstance(value, Fraction):
        return mpf(value.numerator) / value.denominator
    to_mp = getattr(value, "to_mpf", None)
    if callable(to_mp):
        return to_mp()
    return mpf(value)


def frac(u: Any) -> Any:
    """Fractional part {u} in [0, 1)."""
    u = to_mpf(u)
    return u - mp.floor(u)


def dist_to_z(u: Any) -> Any:
    """Distance ‖u‖ from u to the nearest integer, in [0, 1/2]."""
    f = frac(u)
    return min(f, 1 - f)


def fixed_point(u: Any, bits: int) -> int:
    """floor({u} * 2**bits) as a Python integer."""
    with mp.workprec(bits + 64):
        return int(mp.floor(frac(u) * mpf(2) ** bits))


def fixed_offset(u: Any) -> np.uint64:
    """{u} as a 64-bit fixed-point word."""
    return np.uint64(fixed_point(u, 64) % (1 << 64))


def unit_floats(phases: np.ndarray) -> np.ndarray:
    """Convert 64-bit phases to floats in [0, 1) by truncation."""
    return (phases >> np.uint64(11)).astype(np.float64) * 2.0**-53


def torus_norms(phases: np.ndarray) -> np.ndarray:
    """‖·‖ of 64-bit phases as floats."""
    folded = np.minimum(phases, np.uint64(0) - phases)
    return folded.astype(np.float64) / _ONE_WORD


class PhaseKernel:
    """Fixed-point phases {k·θ} for integer arrays k.

    Instances are immutable and cheap; one kernel per rotation number.
    """

    def __init__(self, theta: Any) -> None:
        scaled = fixed_point(theta, _SCALE_BITS)
        self._hi = np.uint64(scaled >> 32)
        self._lo = np.uint64(scaled & _LOW_MASK)
        self.theta = float(scaled) / 2.0**_SCALE_BITS

    def phases(self, k: Any) -> np.ndarray:
        """64-bit phases of {k·θ}; entries of k must satisfy |k| < 2**32."""
        k = np.asarray(k, dtype=np.int64)
        magnitude = np.abs(k)
        if magnitude.size and int(magnitude.max()) >= _MAX_MULTIPLIER:
            raise ValueError("Phase multipliers must be smaller than 2**32")
        mag = magnitude.astype(np.uint64)
        # uint64 arithmetic wraps mod 2**64, which is reduction mod 1
        with np.errstate(over="ignore"):
            phase = mag * self._hi + ((mag * self._lo) >> np.uint64(32))
        return np.where(k < 0, np.uint64(0) - phase, phase)

    def points(self, k: Any, offset: Any = 0) -> np.ndarray:
        """Floats {x + k·θ} in [0, 1)."""
        return unit_floats(self.phases(k) + fixed_offset(offset))

    def norms(self, k: Any) -> np.ndarray:
        """Floats ‖k·θ‖."""
        return torus_norms(self.phases(k))


class CompensatedSum:
    """Running Neumaier-compensated sum over arrays of a fixed shape."""

    def __init__(self, shape: tuple[int, ...] = ()) -> None:
        self.total = np.zeros(shape, dtype=np.float64)
        self.carry = np.zeros(shape, dtype=np.float64)

    def add(self, value: Any) -> None:
        value = np.asarray(value, dtype=np.float64)
        new_total = self.total + value
        total_dominates = np.abs(self.total) >= np.abs(value)
        self.carry = self.carry + np.where(
            total_dominates,
            (self.total - new_total) + value,
            (value - new_total) + self.total,
        )
        self.total = new_total

    @property
    def value(self) -> np.ndarray:
        return self.total + self.carry
