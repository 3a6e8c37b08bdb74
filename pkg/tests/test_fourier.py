"""Tests for the Fourier laboratory."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.cocycle_lab.core.dynamics import make_rotation
from src.cocycle_lab.core.fourier import (
    box_index,
    coboundary_solve,
    decay_bound_check,
    l2_sum_growth,
    map_coeff_quadrature,
    niederreiter_plateau,
    niederreiter_sum,
    quadratic_spectrum,
    quadratic_tail_bound,
    sawtooth_spectrum,
    spectrum_of_map,
    triangle_coeff,
    triangle_coeff_quadrature,
    triangle_spectrum,
)
from src.cocycle_lab.core.maps import get_map
from src.cocycle_lab.core.models import TriangleSpec
from src.cocycle_lab.utils.exceptions import ConfigurationError, ResonanceError


@st.composite
def triangles(draw):
    a = draw(st.floats(0.05, 1.0))
    c = draw(st.floats(0.05, 1.0))
    b = draw(st.floats(c - 1.0, 1.0))
    return TriangleSpec(a, b, c)


@pytest.fixture
def golden():
    return make_rotation("sqrt(5)-1)/2")


class TestTriangleCoefficients:
    """Test closed-form triangle coefficients."""

    def test_zero_coefficient_is_area(self):
        """Test c_0 is the triangle's area."""
        tri = TriangleSpec(0.7, 0.3, 0.5)
        assert triangle_coeff(tri, 0, 0) == pytest.approx(0.175)

    @pytest.mark.parametrize("abc", [(1.0, 1.0, 1.0), (0.7, 0.3, 0.5), (1.0, -0.2, 0.8)])
    @pytest.mark.parametrize("st_pair", [(1, 0), (0, 1), (2, -3), (-1, 4), (3, 3)])
    def test_matches_quadrature(self, abc, st_pair):
        """Test the closed form against adaptive quadrature."""
        tri = TriangleSpec(*abc)
        s, t = st_pair
        closed = triangle_coeff(tri, s, t)
        assert abs(closed - triangle_coeff_quadrature(tri, s, t)) < 1e-9

    def test_vectorized(self):
        """Test array input matches scalar calls."""
        tri = TriangleSpec(1.0, 1.0, 1.0)
        index = box_index(2, 2)
        values = triangle_coeff(tri, index[:, 0], index[:, 1])
        for (s, t), value in zip(index, values, strict=True):
            assert value == pytest.approx(triangle_coeff(tri, int(s), int(t)))

    def test_invalid_triangle(self):
        """Test parameters outside the admissible range raise."""
        with pytest.raises(ValueError):
            TriangleSpec(1.0, -0.6, 0.5)

    @settings(max_examples=50, deadline=None)
    @given(tri=triangles(), s=st.integers(-6, 6), t=st.integers(-6, 6))
    def test_conjugate_symmetry(self, tri, s, t):
        """Test c_{-h} = conj(c_h) for a real indicator."""
        forward = triangle_coeff(tri, s, t)
        backward = triangle_coeff(tri, -s, -t)
        assert abs(backward - forward.conjugate()) < 1e-12


class TestSpectra:
    """Test spectra of registry maps."""

    def test_centered_triangle(self):
        """Test centering removes the zero coefficient only."""
        spectrum = triangle_spectrum(TriangleSpec(1.0, 1.0, 1.0), 4)
        table = spectrum.lookup()
        assert table[(0, 0)] == 0
        assert spectrum.hermitian_defect() < 1e-12
        assert len(spectrum.rows()) == 81

    def test_sawtooth_against_quadrature(self):
        """Test c_1(ψ) = i/2π."""
        spectrum = sawtooth_spectrum(4)
        expected = map_coeff_quadrature(get_map("psi"), (1,))
        assert spectrum.lookup()[(1,)] == pytest.approx(expected, abs=1e-9)
        assert expected == pytest.approx(1j / (2 * math.pi), abs=1e-9)

    def test_quadratic_against_quadrature(self):
        """Test c_n of x(1 − x) − 1/6."""
        spectrum = quadratic_spectrum(4)
        for n in (1, 2, 3):
            expected = map_coeff_quadrature(get_map("quadratic"), (n,))
            assert spectrum.lookup()[(n,)] == pytest.approx(expected, abs=1e-9)

    def test_indicator_map_against_quadrature(self):
        """Test a triangle map coefficient by quadrature."""
        map_ = get_map("delta0")
        spectrum = spectrum_of_map(map_, 3)
        assert spectrum.lookup()[(0, 0)] == pytest.approx(0.5)
        assert spectrum.lookup()[(1, -2)] == pytest.approx(
            map_coeff_quadrature(map_, (1, -2)), abs=1e-9
        )

    def test_harmonic(self):
        """Test cos 2π⟨h, x⟩ has coefficient 1/2 at ±h."""
        spectrum = spectrum_of_map(get_map("harmonic(1,2)"), 3)
        table = spectrum.lookup()
        assert table[(1, 2)] == 0.5
        assert table[(-1, -2)] == 0.5
        assert sum(abs(v) for v in table.values()) == pytest.approx(1.0)

    def test_no_closed_form(self):
        """Test maps without a closed-form spectrum raise."""
        with pytest.raises(ConfigurationError):
            spectrum_of_map(get_map("xy_quarter"), 4)


class TestDecay:
    """Test decay-bound fitting."""

    def test_sawtooth_bound(self):
        """Test |c_r(ψ)| ≤ 1/(2π|r|)."""
        check = decay_bound_check(sawtooth_spectrum(50))
        assert check.violations == []
        assert check.fitted_C == pytest.approx(1 / (2 * math.pi))

    def test_quadratic_bound(self):
        """Test the second-order decay of the quadratic map."""
        check = decay_bound_check(quadratic_spectrum(50))
        assert check.violations == []

    def test_triangle_fit(self):
        """Test a finite constant is fitted for a triangle."""
        check = decay_bound_check(triangle_spectrum(TriangleSpec(0.7, 0.3, 0.5), 16))
        assert 0 < check.fitted_C < math.inf
        assert check.checked == 33 * 33

    def test_no_decay_model(self):
        """Test spectra without decay forms raise."""
        with pytest.raises(ValueError):
            decay_bound_check(spectrum_of_map(get_map("harmonic(1,0)"), 2))


class TestGrowth:
    """Test L² growth sums."""

    def test_inequality_chain(self, golden):
        """Test exact ≤ capped ≤ tail bound at every N."""
        table = l2_sum_growth(sawtooth_spectrum(64), golden, [16, 32, 64, 128], 1.5)
        assert [row[0] for row in table.rows] == [16, 32, 64, 128]
        for _, exact, capped, tail in table.rows:
            assert exact <= capped * (1 + 1e-9)
            assert capped <= tail * (1 + 1e-9)

    def test_exact_sum_against_orbit(self, golden):
        """Test the Dirichlet form equals the L² norm of a trigonometric sum."""
        spectrum = sawtooth_spectrum(8)
        N = 20
        (row,) = l2_sum_growth(spectrum, golden, [N], 1.5).rows
        x = (np.arange(4096) + 0.5) / 4096
        alpha = (math.sqrt(5) - 1) / 2
        total = np.zeros_like(x)
        for h, c in spectrum.lookup().items():
            for k in range(N):
                total += (c * np.exp(2j * np.pi * h[0] * (x + k * alpha))).real
        assert row[1] == pytest.approx(np.mean(total**2), rel=1e-6)

    def test_uncentered_rejected(self):
        """Test a spectrum with a mean raises."""
        pair = make_rotation("sqrt(2), e")
        with pytest.raises(ValueError):
            l2_sum_growth(spectrum_of_map(get_map("delta0"), 4), pair, [8], 1.5)

    def test_exponent_range(self, golden):
        """Test t outside (1, 2) raises."""
        with pytest.raises(ValueError):
            l2_sum_growth(sawtooth_spectrum(8), golden, [8], 2.5)


class TestNiederreiter:
    """Test the Niederreiter series."""

    def test_partial_sums_grow(self):
        """Test partial sums are non-decreasing over nested boxes."""
        pair = make_rotation("sqrt(2), sqrt(3)")
        plateau = niederreiter_plateau(pair, [[1, 0], [0, 1]], 1.5, [4, 8, 16])
        sums = plateau.sums
        assert sums[0] <= sums[1] <= sums[2]
        assert sums[-1] == pytest.approx(niederreiter_sum(pair, [[1, 0], [0, 1]], 1.5, 16))

    def test_dependent_forms(self):
        """Test linearly dependent forms raise."""
        pair = make_rotation("sqrt(2), sqrt(3)")
        with pytest.raises(ValueError):
            niederreiter_sum(pair, [[1, 1], [2, 2]], 1.5, 4)


class TestCoboundary:
    """Test the coboundary solver on T¹."""

    @staticmethod
    def exact_quadratic(xs):
        return get_map("quadratic").evaluate_array(xs[:, None])[:, 0]

    def test_series_residual(self, golden):
        """Test ψ(x + α) − ψ(x) reproduces the truncated series of φ."""
        result = coboundary_solve(quadratic_spectrum(200), golden, grid=2000)
        assert result.residual < 1e-10
        assert result.psi_l1 > 0
        assert result.exact_residual is None

    @pytest.mark.parametrize("h_max", [10, 100, 1000])
    def test_exact_residual_within_tail(self, h_max):
        """Test the residual against x(1 − x) − 1/6 stays under the series tail."""
        alpha = make_rotation("sqrt(2)-1")
        result = coboundary_solve(
            quadratic_spectrum(h_max), alpha, evaluator=self.exact_quadratic
        )
        bound = quadratic_tail_bound(h_max)
        assert 0.9 * bound < result.exact_residual <= bound

    def test_exact_residual_decreases(self):
        """Test the residual against the map shrinks as the truncation grows."""
        alpha = make_rotation("sqrt(2)-1")
        spectrum = quadratic_spectrum(1000)
        residuals = [
            coboundary_solve(spectrum, alpha, h, grid=4000, evaluator=self.exact_quadratic)
            .exact_residual
            for h in (10, 50, 250, 1000)
        ]
        assert residuals == sorted(residuals, reverse=True)
        assert residuals[-1] < residuals[0] / 50

    def test_wrong_map_detected(self, golden):
        """Test the residual against a different map is of order one."""
        result = coboundary_solve(
            quadratic_spectrum(200), golden, grid=2000, evaluator=lambda xs: np.ones_like(xs)
        )
        assert result.residual < 1e-10
        assert result.exact_residual > 0.5

    def test_tail_bound(self):
        """Test the tail bound is 1/(π²H)."""
        assert quadratic_tail_bound(1000) == pytest.approx(1 / (1000 * math.pi**2))
        with pytest.raises(ValueError):
            quadratic_tail_bound(0)

    def test_resonance(self):
        """Test a rational rotation hits the resonance guard."""
        with pytest.raises(ResonanceError):
            coboundary_solve(sawtooth_spectrum(8), make_rotation("1/4"))

    def test_t2_rejected(self):
        """Test coboundaries are solved on T¹ only."""
        spectrum = triangle_spectrum(TriangleSpec(1.0, 1.0, 1.0), 2)
        with pytest.raises(ValueError):
            coboundary_solve(spectrum, make_rotation("sqrt(2), e"))
