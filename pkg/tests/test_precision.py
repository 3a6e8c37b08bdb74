"""Tests for high-precision helpers and orbit kernels."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mp, mpf

from src.cocycle_lab.utils.precision import (
    CompensatedSum,
    PhaseKernel,
    dist_to_z,
    frac,
    to_mpf,
)

reals = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)


class TestDistToZ:
    """Test the distance to the nearest integer."""

    @given(u=reals)
    def test_range(self, u):
        """Test ‖u‖ lies in [0, 1/2]."""
        assert 0 <= dist_to_z(u) <= 0.5

    @given(u=reals, k=st.integers(-1000, 1000))
    def test_integer_shift(self, u, k):
        """Test ‖u + k‖ = ‖u‖."""
        with mp.workprec(128):
            assert abs(dist_to_z(mpf(u) + k) - dist_to_z(u)) < mpf(2) ** -80

    @given(u=reals)
    def test_symmetric(self, u):
        """Test ‖−u‖ = ‖u‖."""
        with mp.workprec(128):
            assert abs(dist_to_z(-mpf(u)) - dist_to_z(u)) < mpf(2) ** -80

    def test_fraction(self):
        """Test exact fractions convert without rounding through floats."""
        assert dist_to_z(Fraction(7, 3)) == pytest.approx(1 / 3)
        assert frac(Fraction(-1, 4)) == 0.75
        assert to_mpf(Fraction(1, 8)) == mpf("0.125")


class TestPhaseKernel:
    """Test fixed-point orbit phases."""

    @pytest.fixture(scope="class")
    def kernel(self):
        return PhaseKernel(mp.sqrt(2) - 1)

    @settings(max_examples=200)
    @given(k=st.integers(-(2**31), 2**31))
    def test_points_match_mpmath(self, k):
        """Test {k·θ} agrees with a 128-bit evaluation on the circle."""
        with mp.workprec(128):
            theta = mp.sqrt(2) - 1
            exact = float(frac(k * theta))
        point = float(PhaseKernel(theta).points(np.array([k]))[0])
        gap = abs(point - exact)
        assert min(gap, 1 - gap) < 1e-12

    def test_norms(self, kernel):
        """Test ‖q·θ‖ is small at convergent denominators."""
        norms = kernel.norms(np.array([2, 5, 12, 29, 70]))
        assert np.all(np.diff(norms) < 0)
        assert norms[-1] < 1 / 70

    def test_negative_multipliers(self, kernel):
        """Test {−kθ} = 1 − {kθ}."""
        k = np.arange(1, 50)
        forward = kernel.points(k)
        backward = kernel.points(-k)
        np.testing.assert_allclose(forward + backward, 1.0, atol=1e-12)

    def test_offset(self, kernel):
        """Test the offset shifts every point."""
        shifted = kernel.points(np.array([0]), offset=0.25)
        assert shifted[0] == pytest.approx(0.25)

    def test_multiplier_limit(self, kernel):
        """Test multipliers beyond 2**32 are rejected."""
        with pytest.raises(ValueError):
            kernel.phases(np.array([2**32]))


class TestCompensatedSum:
    """Test Neumaier summation."""

    def test_cancellation(self):
        """Test a small term survives cancellation of large ones."""
        total = CompensatedSum()
        for value in (1e16, 1.0, -1e16):
            total.add(value)
        assert total.value == 1.0

    def test_vector_shape(self):
        """Test sums over arrays keep their shape."""
        total = CompensatedSum((2,))
        for _ in range(10):
            total.add([0.1, -0.1])
        np.testing.assert_allclose(total.value, [1.0, -1.0])
