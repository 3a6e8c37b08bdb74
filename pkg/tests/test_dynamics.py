"""Tests for torus dynamics and ergodic sums."""

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from src.cocycle_lab.core.dynamics import (
    SUP_GRID_MIN,
    cocycle_identity_residual,
    derivative_sandwich_check,
    ergodic_series,
    ergodic_sum,
    ergodic_sums_batch,
    evaluate,
    gamma_closed_forms,
    grid_axes,
    grid_points,
    grid_sums,
    irrationality_diagnostic,
    lambda_functionals,
    linear_deviation_check,
    log_schedule,
    make_rotation,
    rotate,
    shadow_audit,
    sup_over_grid,
    triangle_identity_check,
    triangle_identity_sweep,
)
from src.cocycle_lab.core.maps import get_map
from src.cocycle_lab.utils.exceptions import BoundaryHitError, ConfigurationError


@pytest.fixture
def golden():
    return make_rotation("sqrt(5)-1)/2")


@pytest.fixture
def pair():
    return make_rotation("sqrt(2), e")


class TestRotation:
    """Test rotation vectors and the irrationality diagnostic."""

    def test_components_reduced(self, pair):
        """Test components are reduced mod 1."""
        assert pair.rho == 2
        np.testing.assert_allclose(pair.floats(), [math.sqrt(2) - 1, math.e - 2])
        assert pair.labels == ("sqrt(2)", "e")

    def test_too_many_components(self):
        """Test three components are rejected."""
        with pytest.raises(ConfigurationError):
            make_rotation("1, 2, 3")

    def test_totally_irrational(self):
        """Test (√2, √3) has no small integer relation."""
        report = irrationality_diagnostic(make_rotation("sqrt(2), sqrt(3)"))
        assert report.totally_irrational
        assert report.relation is None

    def test_relation_found(self):
        """Test (√2, √8) satisfies an integer relation."""
        report = irrationality_diagnostic(make_rotation("sqrt(2), sqrt(8)"))
        assert not report.totally_irrational
        assert report.relation is not None

    def test_rotate(self, golden):
        """Test x + nα mod 1 at high precision."""
        (x,) = rotate(golden, (0.25,), 3)
        expected = (0.25 + 3 * (math.sqrt(5) - 1) / 2) % 1.0
        assert float(x) == pytest.approx(expected)


class TestEvaluate:
    """Test single-point evaluation."""

    def test_boundary_hit_flagged(self):
        """Test a point on a break is flagged."""
        result = evaluate(get_map("step(0.5)"), (0.5,))
        assert result.boundary_hit
        assert result.boundary_distance == 0.0

    def test_boundary_hit_strict(self):
        """Test strict evaluation raises on a break."""
        with pytest.raises(BoundaryHitError):
            evaluate(get_map("step(0.5)"), (0.5,), strict=True)

    def test_cell_index(self):
        """Test the cell of an interior point."""
        result = evaluate(get_map("step(0.3)"), (0.8,))
        assert result.cell == (1,)
        assert result.values == pytest.approx((-0.3,))


class TestErgodicSums:
    """Test ergodic sums along single orbits."""

    def test_empty_sum(self, golden):
        """Test φ_0 = 0."""
        assert ergodic_sum(get_map("psi"), golden, (0.1,), 0).value.tolist() == [0.0]

    def test_negative_n(self, golden):
        """Test negative n raises."""
        with pytest.raises(ValueError):
            ergodic_sum(get_map("psi"), golden, (0.1,), -1)

    def test_matches_direct_sum(self, golden):
        """Test against a plain loop over the orbit."""
        n = 1000
        direct = math.fsum(
            ((0.1 + k * (math.sqrt(5) - 1) / 2) % 1.0) - 0.5 for k in range(n)
        )
        assert ergodic_sum(get_map("psi"), golden, (0.1,), n).value[0] == pytest.approx(
            direct, abs=1e-9
        )

    def test_cocycle_identity(self, golden):
        """Test φ_{m+n}(x) = φ_m(x) + φ_n(T^m x)."""
        assert cocycle_identity_residual(get_map("psi"), golden, (0.1,), 100, 250) < 1e-9

    def test_cocycle_identity_on_t2(self, pair):
        """Test the cocycle identity for a T^2 map."""
        residual = cocycle_identity_residual(get_map("xy_quarter"), pair, (0.3, 0.7), 64, 99)
        assert residual < 1e-9

    @settings(max_examples=30, deadline=None)
    @given(
        x=st.floats(0, 1, exclude_max=True),
        m=st.integers(0, 2000),
        n=st.integers(0, 2000),
    )
    def test_cocycle_identity_property(self, x, m, n):
        """Test the cocycle identity for arbitrary split points."""
        golden = make_rotation("sqrt(5)-1)/2")
        assert cocycle_identity_residual(get_map("psi"), golden, (x,), m, n) < 1e-9

    def test_dimension_mismatch(self, golden):
        """Test a T^2 map with a 1-dimensional rotation raises."""
        with pytest.raises(ValueError):
            ergodic_sum(get_map("xy_quarter"), golden, (0.1, 0.2), 10)

    def test_series_matches_single_sums(self, golden):
        """Test the one-pass series agrees with separate sums."""
        psi = get_map("psi")
        series = ergodic_series(psi, golden, (0.1,), [1, 10, 100, 1000])
        assert series.schedule == (1, 10, 100, 1000)
        for row, n in zip(series.values, series.schedule, strict=True):
            assert row[0] == pytest.approx(ergodic_sum(psi, golden, (0.1,), n).value[0], abs=1e-9)

    def test_series_rows(self, golden):
        """Test CSV rows carry n, the components and the sup column."""
        series = ergodic_series(get_map("psi"), golden, (0.1,), [10, 20], sup_grid=10**5)
        rows = series.rows()
        assert [r[0] for r in rows] == [10, 20]
        assert all(len(r) == 4 and r[2] >= 0 for r in rows)

    def test_batch_matches_single(self, pair):
        """Test batched sums agree with single-orbit sums."""
        map_ = get_map("gamma(1.5,1.3)")
        points = np.array([[0.3, 0.7], [0.11, 0.52]])
        batch, _ = ergodic_sums_batch(map_, pair, points, 300)
        for i, x in enumerate(points):
            single = ergodic_sum(map_, pair, tuple(x), 300).value
            np.testing.assert_allclose(batch[i], single, atol=1e-9)

    def test_shadow_audit(self, golden):
        """Test float64 orbit sums agree with the exact fixed-point rerun."""
        audit = shadow_audit(get_map("psi"), golden, (0.1,), 2000)
        assert audit.difference < 1e-9


class TestGridSums:
    """Test the closed-form grid kernels against brute force."""

    def test_sawtooth_kernel(self, golden):
        """Test the sorted-orbit sawtooth sums on a grid."""
        map_ = get_map("psi")
        fast = grid_sums(map_, golden, 50, 16)
        slow, _ = ergodic_sums_batch(map_, golden, grid_points(grid_axes(1, 16)), 50)
        np.testing.assert_allclose(fast.reshape(-1), slow[:, 0], atol=1e-9)

    def test_sawtooth_kernel_on_triangle(self, pair):
        """Test the three-term sawtooth form of the centered triangle."""
        map_ = get_map("triangle0")
        fast = grid_sums(map_, pair, 40, 8)
        slow, _ = ergodic_sums_batch(map_, pair, grid_points(grid_axes(2, 8)), 40)
        np.testing.assert_allclose(fast.reshape(-1), slow[:, 0], atol=1e-8)

    def test_product_kernel(self, pair):
        """Test the product kernel for x·y − 1/4."""
        map_ = get_map("xy_quarter")
        fast = grid_sums(map_, pair, 37, 8)
        slow, _ = ergodic_sums_batch(map_, pair, grid_points(grid_axes(2, 8)), 37)
        np.testing.assert_allclose(fast.reshape(-1), slow[:, 0], atol=1e-9)


class TestSchedule:
    """Test log schedules."""

    def test_decades(self):
        """Test one point per decade."""
        assert log_schedule(1000, 1) == [1, 10, 100, 1000]

    def test_distinct_and_sorted(self):
        """Test entries are distinct and increasing."""
        marks = log_schedule(10**5, 10)
        assert marks == sorted(set(marks))
        assert marks[0] == 1
        assert marks[-1] == 10**5

    def test_invalid(self):
        """Test n_max < 1 raises."""
        with pytest.raises(ValueError):
            log_schedule(0)


class TestTriangleIdentity:
    """Test 1_{Δ0}(x, y) = {x − y} + {y} − {x}."""

    def test_inside_and_outside(self):
        """Test both sides of the diagonal."""
        assert triangle_identity_check(0.2, 0.7) < 1e-12
        assert triangle_identity_check(0.7, 0.2) < 1e-12

    def test_on_a_line(self):
        """Test points on x = y are rejected."""
        with pytest.raises(BoundaryHitError):
            triangle_identity_check(0.3, 0.3)

    @given(
        x=st.floats(-5, 5, allow_nan=False),
        y=st.floats(-5, 5, allow_nan=False),
    )
    def test_identity_property(self, x, y):
        """Test the identity at arbitrary points off the three lines."""
        gaps = [abs(u - round(u)) for u in (x, y, x - y)]
        assume(min(gaps) > 1e-9)
        assert triangle_identity_check(x, y) < 1e-12

    def test_sweep(self):
        """Test random sampling keeps the residual at rounding level."""
        worst, skipped = triangle_identity_sweep(10000, seed=1)
        assert worst < 1e-12
        assert skipped == 0


class TestLambdaFunctionals:
    """Test λ-functionals of maps with derivatives."""

    def test_xy_quarter(self):
        """Test λ1(xy − 1/4) = 1/2."""
        report = lambda_functionals(get_map("xy_quarter"))
        assert report.lambda1 == pytest.approx([0.5], abs=1e-9)
        assert report.max_disagreement < 1e-9

    def test_gamma_against_closed_form(self):
        """Test boundary traces reproduce the closed forms."""
        closed = gamma_closed_forms(1.5, 1.3)
        report = lambda_functionals(get_map("gamma(1.5,1.3)"))
        assert report.boundary[0][0] == pytest.approx(closed["lambda1"], abs=1e-8)
        assert report.boundary[0][1] == pytest.approx(closed["lambda2"], abs=1e-8)

    def test_gamma_pair_determinant(self):
        """Test det M of the two-component map matches the closed form."""
        closed = gamma_closed_forms(1.5, 1.3)
        report = lambda_functionals(get_map("gamma_pair(1.5,1.3)"))
        assert report.det_M == pytest.approx(closed["det_M"], abs=1e-8)

    def test_step_rejected(self):
        """Test step functions have no λ-functionals."""
        with pytest.raises(ValueError):
            lambda_functionals(get_map("step(0.3)"))

    def test_closed_form_range(self):
        """Test the closed forms need 1 ≤ γ < 2."""
        with pytest.raises(ValueError):
            gamma_closed_forms(2.5, 1.5)
        with pytest.raises(ValueError):
            gamma_closed_forms(0.9, 1.5)
        with pytest.raises(ValueError):
            gamma_closed_forms(2.0, 1.5)

    def test_gamma_one_allowed(self):
        """Test γ = 1 reduces the closed forms to those of {x}."""
        closed = gamma_closed_forms(1.0, 1.5)
        assert closed["mean"] == pytest.approx(0.5 * (0.75 - 1 + 1 / 1.5))
        assert closed["lambda2"] == pytest.approx(0.75)
        report = lambda_functionals(get_map("gamma(1,1.5)"))
        assert report.boundary[0][0] == pytest.approx(closed["lambda1"], abs=1e-8)
        assert report.boundary[0][1] == pytest.approx(closed["lambda2"], abs=1e-8)


class TestSupOverGrid:
    """Test the sup-norm grid and its density floor."""

    def test_coarse_grid_rejected(self, golden):
        """Test grids below the floor for the torus dimension raise."""
        pair = make_rotation("sqrt(2)-1, sqrt(3)-1")
        with pytest.raises(ValueError):
            sup_over_grid(get_map("triangle0"), pair, 100, 256)
        with pytest.raises(ValueError):
            sup_over_grid(get_map("psi"), golden, 100, SUP_GRID_MIN[2])

    def test_override(self, pair):
        """Test an explicit floor admits a coarse grid."""
        value = sup_over_grid(get_map("xy_quarter"), pair, 50, 8, min_grid=8)
        fast = grid_sums(get_map("xy_quarter"), pair, 50, 8)
        assert value == pytest.approx(float(np.max(np.abs(fast))))

    def test_zero_terms(self, golden):
        """Test n = 0 gives 0 on an admissible grid."""
        assert sup_over_grid(get_map("psi"), golden, 0, SUP_GRID_MIN[1]) == 0.0

    def test_koksma_bound(self):
        """Test |ψ_q| ≤ 1 over the grid at a denominator of √2 − 1."""
        alpha = make_rotation("sqrt(2)-1")
        assert sup_over_grid(get_map("psi"), alpha, 985, SUP_GRID_MIN[1]) <= 1 + 1e-9


class TestDerivativeChecks:
    """Test the one- and two-sided derivative bounds of ergodic sums."""

    @pytest.fixture
    def algebraic(self):
        return make_rotation("sqrt(2)-1, sqrt(3)-1")

    def test_sandwich_holds(self, algebraic):
        """Test every same-cell pair of {x1}{x2} − 1/4 satisfies the sandwich."""
        report = derivative_sandwich_check(get_map("xy_quarter"), algebraic, 2000, 100)
        assert report.lambda1 == pytest.approx(0.5, abs=1e-9)
        assert report.pass_fraction == 1.0

    def test_deviation_holds(self, algebraic):
        """Test two-sided moves follow n·Λu for {x1}{x2} − 1/4."""
        report = linear_deviation_check(get_map("xy_quarter"), algebraic, 2000, 200)
        assert report.lambda_matrix == pytest.approx([[0.5, 0.5]], abs=1e-9)
        assert report.samples > 0
        assert report.pass_fraction == 1.0
        assert report.max_error <= report.tolerance

    def test_deviation_two_components(self, algebraic):
        """Test both components of a two-valued map are expanded."""
        report = linear_deviation_check(get_map("gamma_pair(1.5,1.3)"), algebraic, 2000, 100)
        assert np.asarray(report.lambda_matrix).shape == (2, 2)
        assert report.mean_error < report.tolerance

    def test_deviation_wrong_functionals(self, algebraic):
        """Test a wrong Λ is detected on most pairs."""
        report = linear_deviation_check(
            get_map("xy_quarter"), algebraic, 2000, 200, lambda_matrix=[[0.5, -0.5]]
        )
        assert report.pass_fraction < 0.5

    def test_deviation_needs_derivatives(self, golden):
        """Test a step function is refused."""
        with pytest.raises(ValueError):
            linear_deviation_check(get_map("step(0.3)"), golden, 10)
