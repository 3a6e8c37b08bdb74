"""Tests for the piecewise map registry."""

import numpy as np
import pytest

from src.cocycle_lab.core.dynamics import check_derivatives, check_mean, grid_mean
from src.cocycle_lab.core.maps import MAP_NAMES, gamma_mean, get_map
from src.cocycle_lab.core.models import MapClass
from src.cocycle_lab.utils.exceptions import ConfigurationError


def off_boundary_points(map_, count=500, seed=3, margin=1e-6):
    rng = np.random.default_rng(seed)
    points = rng.random((4 * count, map_.rho))
    return points[map_.boundary_distance(points) > margin][:count]


class TestRegistry:
    """Test map lookup by name."""

    def test_names(self):
        """Test the registry exposes the documented maps."""
        for name in ("zero", "psi", "step", "quadratic", "xy_quarter", "gamma", "delta0"):
            assert name in MAP_NAMES

    def test_rho_follows_request(self):
        """Test psi can live on T^1 or T^2."""
        assert get_map("psi").rho == 1
        assert get_map("psi", 2).rho == 2

    def test_unknown_name(self):
        """Test unknown maps list the available ones."""
        with pytest.raises(ConfigurationError, match="available"):
            get_map("nope")

    def test_wrong_arity(self):
        """Test a missing argument raises."""
        with pytest.raises(ConfigurationError):
            get_map("step")

    def test_invalid_parameter(self):
        """Test out-of-range parameters become ConfigurationError."""
        with pytest.raises(ConfigurationError):
            get_map("step(1.5)")

    def test_dimension_mismatch(self):
        """Test a T^2 map requested on T^1 raises."""
        with pytest.raises(ConfigurationError):
            get_map("xy_quarter", 1)

    def test_harmonic_needs_integers(self):
        """Test harmonic frequencies must be integers."""
        with pytest.raises(ConfigurationError):
            get_map("harmonic(1.5,0)")


class TestValues:
    """Test pointwise values of registry maps."""

    def test_psi(self):
        """Test ψ(x) = {x} − 1/2."""
        assert get_map("psi").evaluate_array([[0.25]])[0, 0] == pytest.approx(-0.25)
        assert get_map("psi", 2).evaluate_array([[0.75, 0.1]])[0, 0] == pytest.approx(0.25)

    def test_step(self):
        """Test the centered step function."""
        step = get_map("step(0.3)")
        values = step.evaluate_array([[0.1], [0.5]])[:, 0]
        assert values == pytest.approx([0.7, -0.3])
        assert step.class_tag is MapClass.STEP

    def test_quadratic(self):
        """Test x(1 − x) − 1/6."""
        assert get_map("quadratic").evaluate_array([[0.5]])[0, 0] == pytest.approx(0.25 - 1 / 6)

    def test_delta0(self):
        """Test the indicator of {x < y}."""
        values = get_map("delta0").evaluate_array([[0.2, 0.7], [0.7, 0.2]])[:, 0]
        assert values.tolist() == [1.0, 0.0]

    def test_delta1(self):
        """Test the indicator of {x + y < 1}."""
        values = get_map("delta1").evaluate_array([[0.2, 0.3], [0.7, 0.6]])[:, 0]
        assert values.tolist() == [1.0, 0.0]

    def test_triangle0_is_centered(self):
        """Test the centered triangle takes ±1/2."""
        tri = get_map("triangle0")
        assert tri.evaluate_array([[0.2, 0.7]])[0, 0] == pytest.approx(0.5)
        assert tri.centered

    def test_harmonic(self):
        """Test cos(2π⟨h, x⟩)."""
        assert get_map("harmonic(1,0)").evaluate_array([[0.0, 0.3]])[0, 0] == pytest.approx(1.0)

    def test_boundary_distance(self):
        """Test the torus distance to the nearest break."""
        step = get_map("step(0.3)")
        assert step.boundary_distance(np.array([[0.31]]))[0] == pytest.approx(0.01)

    def test_points_wrap(self):
        """Test coordinates are reduced mod 1."""
        psi = get_map("psi")
        assert psi.evaluate_array([[1.25]])[0, 0] == pytest.approx(-0.25)


class TestDecompositions:
    """Test sawtooth and closed-form descriptions against pointwise values."""

    @pytest.mark.parametrize("name", ["delta0", "delta1", "triangle0", "step(0.3)"])
    def test_sawtooth_form(self, name):
        """Test the sawtooth decomposition reproduces the map."""
        map_ = get_map(name)
        points = off_boundary_points(map_)
        np.testing.assert_allclose(
            map_.sawtooth_value(points), map_.evaluate_array(points)[:, 0], atol=1e-12
        )

    @pytest.mark.parametrize("gamma", [1.2, 1.5, 1.9, 2.5])
    def test_gamma_mean(self, gamma):
        """Test ∫{γx} against a midpoint sum."""
        expected = np.mean((gamma * ((np.arange(200000) + 0.5) / 200000)) % 1.0)
        assert gamma_mean(gamma) == pytest.approx(expected, abs=1e-4)

    def test_gamma_closed_form(self):
        """Test gamma_mean equals γ/2 − 1 + 1/γ on (1, 2)."""
        for gamma in (1.2, 1.5, 1.9):
            assert gamma_mean(gamma) == pytest.approx(gamma / 2 - 1 + 1 / gamma)


class TestValidation:
    """Test derivative and mean validation of map pieces."""

    @pytest.mark.parametrize("name", ["quadratic", "xy_quarter", "gamma(1.5,1.3)", "harmonic(1,2)"])
    def test_derivatives(self, name):
        """Test declared gradients match finite differences."""
        assert check_derivatives(get_map(name)) < 1e-4

    @pytest.mark.parametrize("name", ["quadratic", "step(0.3)", "xy_quarter", "gamma(1.5,1.3)"])
    def test_declared_means(self, name):
        """Test declared means agree with cell-wise integration."""
        means = check_mean(get_map(name))
        assert means[0] == pytest.approx(0.0, abs=1e-8)

    @pytest.mark.parametrize("name", ["psi", "quadratic", "xy_quarter", "delta0"])
    def test_grid_mean_centered(self, name):
        """Test centered maps average to zero on a 1000-point grid per axis."""
        assert abs(grid_mean(get_map(name), 1000)).max() < 1e-3

    def test_step_has_no_gradient(self):
        """Test derivative checks need a gradient."""
        with pytest.raises(ValueError):
            check_derivatives(get_map("step(0.3)"))
