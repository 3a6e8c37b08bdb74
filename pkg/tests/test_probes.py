"""Tests for skew products and the ergodicity probes."""

import math

import numpy as np
import pytest

from src.cocycle_lab.core.dynamics import ergodic_sum, make_rotation
from src.cocycle_lab.core.maps import get_map
from src.cocycle_lab.core.models import FiberMode
from src.cocycle_lab.core.probes import (
    boxes_measure,
    conjugation_check,
    conjugation_residual,
    default_weyl_panel,
    essential_value_probe,
    fiber_histogram,
    full_torus,
    harmonic_l2_norm,
    in_boxes,
    induced_cocycle,
    l2_growth_probe,
    recurrence_probe,
    simulate_skew,
    weyl_probe,
)
from src.cocycle_lab.utils.exceptions import BoundaryHitError, ReturnTimeoutError


@pytest.fixture
def golden():
    return make_rotation("golden")


@pytest.fixture
def pair():
    return make_rotation("sqrt(2), sqrt(3)")


@pytest.fixture
def psi():
    return get_map("psi")


class TestBoxes:
    """Test base sets built from boxes."""

    def test_half_open(self):
        """Test boxes include their lower and exclude their upper faces."""
        boxes = [((0.0, 0.5), (0.25, 0.75))]
        points = np.array([[0.0, 0.25], [0.5, 0.3], [0.2, 0.75], [0.49, 0.74]])
        assert in_boxes(points, boxes).tolist() == [True, False, False, True]

    def test_union(self):
        """Test membership in any box counts."""
        boxes = [((0.0, 0.1),), ((0.9, 1.0),)]
        assert in_boxes(np.array([[0.05], [0.5], [0.95]]), boxes).tolist() == [True, False, True]

    def test_measure(self):
        """Test volumes add up."""
        assert boxes_measure([((0.0, 0.5), (0.0, 0.5)), ((0.5, 1.0), (0.5, 0.75))]) == 0.375
        assert boxes_measure(full_torus(2)) == 1.0

    def test_measure_outside_unit_cube(self):
        """Test sides leaving [0, 1] are rejected."""
        with pytest.raises(ValueError):
            boxes_measure([((0.5, 1.5),)])


class TestSkewProduct:
    """Test orbits of the skew product."""

    def test_real_fiber_matches_ergodic_sum(self, psi, golden):
        """Test the fiber at time N is z0 plus the ergodic sum."""
        orbit = simulate_skew(psi, golden, (0.1,), (0.5,), 1000)
        expected = ergodic_sum(psi, golden, (0.1,), 1000).value
        assert orbit.fiber[-1][0] == pytest.approx(0.5 + expected[0], abs=1e-9)
        assert orbit.fiber[0][0] == 0.5
        assert orbit.telescoping_error < 1e-9

    def test_intermediate_times(self, psi, golden):
        """Test every recorded time carries its partial sum."""
        orbit = simulate_skew(psi, golden, (0.1,), (0.0,), 200, decimation=50)
        assert orbit.times.tolist() == [0, 50, 100, 150, 200]
        for t, z in zip(orbit.times, orbit.fiber):
            if t:
                direct = ergodic_sum(psi, golden, (0.1,), int(t)).value[0]
                assert z[0] == pytest.approx(direct, abs=1e-9)

    def test_base_follows_rotation(self, psi, golden):
        """Test the base coordinate is x0 + n alpha mod 1."""
        orbit = simulate_skew(psi, golden, (0.1,), (0.0,), 10)
        a = (math.sqrt(5) - 1) / 2
        expected = [(0.1 + n * a) % 1.0 for n in orbit.times]
        np.testing.assert_allclose(orbit.base[:, 0], expected, atol=1e-12)

    def test_default_decimation(self, psi, golden):
        """Test short orbits keep every step."""
        orbit = simulate_skew(psi, golden, (0.1,), (0.0,), 100)
        assert orbit.decimation == 1
        assert len(orbit.times) == 101

    def test_torus_fiber(self, pair):
        """Test torus fibers move by a times the integer sums."""
        delta0 = get_map("delta0")
        a = math.sqrt(5) - 2
        real = simulate_skew(delta0, pair, (0.3, 0.6), (0.0,), 500)
        torus = simulate_skew(
            delta0, pair, (0.3, 0.6), (0.25,), 500, mode=FiberMode.TORUS, a=["sqrt(5)-2"]
        )
        expected = (0.25 + np.rint(real.fiber[:, 0]) * a) % 1.0
        gap = np.abs(torus.fiber[:, 0] - expected)
        assert np.all(np.minimum(gap, 1.0 - gap) < 1e-9)
        assert np.all((torus.fiber >= 0) & (torus.fiber < 1))

    def test_torus_needs_translation(self, pair):
        """Test a torus fiber without a translation vector is rejected."""
        with pytest.raises(ValueError):
            simulate_skew(get_map("delta0"), pair, (0.3, 0.6), (0.0,), 10, mode=FiberMode.TORUS)

    def test_histogram(self, pair):
        """Test the torus histogram counts every sample."""
        orbit = simulate_skew(
            get_map("delta0"),
            pair,
            (0.3, 0.6),
            (0.0,),
            2000,
            mode=FiberMode.TORUS,
            a=["sqrt(5)-2"],
        )
        histogram = fiber_histogram(orbit, bins=8)
        assert histogram["samples"] == len(orbit.times)
        assert sum(histogram["counts"][0]) == len(orbit.times)

    def test_histogram_needs_torus(self, psi, golden):
        """Test real fibers have no histogram."""
        orbit = simulate_skew(psi, golden, (0.1,), (0.0,), 10)
        with pytest.raises(ValueError):
            fiber_histogram(orbit)

    @pytest.mark.parametrize(
        "kwargs",
        [{"N": 0}, {"N": 10**9}, {"N": 10, "z0": (0.0, 0.0)}],
    )
    def test_invalid_arguments(self, psi, golden, kwargs):
        """Test invalid lengths and fiber dimensions are rejected."""
        arguments = {"N": 10, "z0": (0.0,)} | kwargs
        with pytest.raises(ValueError):
            simulate_skew(psi, golden, (0.1,), arguments["z0"], arguments["N"])


class TestRecurrence:
    """Test the recurrence probe."""

    def test_report_fields(self, psi, golden):
        """Test hit fractions are monotone in the radius."""
        report = recurrence_probe(psi, golden, 1000, points=100, seed=7)
        assert report.points == 100
        assert report.radii == (0.1, 0.05, 0.01, 0.005)
        assert set(report.hit_fraction) == {"0.1", "0.05", "0.01", "0.005"}
        fractions = [report.hit_fraction[f"{r:g}"] for r in report.radii]
        assert all(0.0 <= f <= 1.0 for f in fractions)
        assert fractions == sorted(fractions, reverse=True)
        assert report.min_abs.shape == (100,)
        assert 0.0 <= report.stagnant_fraction <= 1.0

    def test_profile_decreases(self, psi, golden):
        """Test the running minimum of |phi_n| never increases."""
        report = recurrence_probe(psi, golden, 1000, points=100, seed=7)
        assert report.profile.shape == (len(report.profile_schedule), 100)
        assert np.all(np.diff(report.profile, axis=0) <= 0)

    def test_seeded(self, psi, golden):
        """Test equal seeds give equal reports."""
        first = recurrence_probe(psi, golden, 200, points=100, seed=3)
        second = recurrence_probe(psi, golden, 200, points=100, seed=3)
        np.testing.assert_array_equal(first.min_abs, second.min_abs)

    def test_minimum_points(self, psi, golden):
        """Test fewer than 100 base points are rejected."""
        with pytest.raises(ValueError):
            recurrence_probe(psi, golden, 100, points=50)


class TestL2Growth:
    """Test the L2 growth probe."""

    def test_harmonic_norm(self, pair):
        """Test the Monte-Carlo norm agrees with the Dirichlet kernel."""
        report = l2_growth_probe(get_map("harmonic(1,0)"), pair, [10, 100, 1000], seed=5)
        for n, norm in zip(report.schedule, report.norms):
            assert norm == pytest.approx(harmonic_l2_norm(pair, (1, 0), n), rel=0.1)

    def test_bounded_sums_consistent(self, pair):
        """Test bounded sums give a slope well below one."""
        report = l2_growth_probe(get_map("harmonic(1,0)"), pair, [10, 100, 1000], seed=5)
        assert report.verdict == "consistent"

    def test_harmonic_norm_zero_frequency(self, pair):
        """Test the constant function grows linearly."""
        assert harmonic_l2_norm(pair, (0, 0), 17) == 17.0

    def test_harmonic_norm_dimension(self, pair):
        """Test mismatched frequencies are rejected."""
        with pytest.raises(ValueError):
            harmonic_l2_norm(pair, (1,), 10)

    @pytest.mark.parametrize("schedule,points", [([10], 1000), ([10, 100], 10)])
    def test_invalid(self, psi, golden, schedule, points):
        """Test short schedules and small samples are rejected."""
        with pytest.raises(ValueError):
            l2_growth_probe(psi, golden, schedule, points=points)


class TestEssentialValues:
    """Test the essential value event probe."""

    def test_full_window(self, psi, golden):
        """Test an unbounded window over the whole circle catches every point."""
        report = essential_value_probe(psi, golden, full_torus(1), (0.0, math.inf), [1, 2, 5], 1000)
        assert report.base_measure == 1.0
        assert [fraction for _, fraction in report.hits] == [1.0, 1.0, 1.0]

    def test_unreachable_window(self, psi, golden):
        """Test |phi_n| <= n/2 keeps the window [5, 6] empty for small n."""
        report = essential_value_probe(psi, golden, full_torus(1), (5.0, 6.0), [1, 2, 3], 1000)
        assert report.positive == []

    def test_base_measure(self, psi, golden):
        """Test the base fraction follows the boxes."""
        report = essential_value_probe(psi, golden, [((0.0, 0.5),)], (0.0, 1.0), [1], 1000)
        assert report.base_measure == pytest.approx(0.5)

    def test_invalid(self, psi, golden):
        """Test reversed windows and coarse grids are rejected."""
        with pytest.raises(ValueError):
            essential_value_probe(psi, golden, full_torus(1), (1.0, 0.0), [1], 1000)
        with pytest.raises(ValueError):
            essential_value_probe(psi, golden, full_torus(1), (0.0, 1.0), [1], 100)


class TestWeyl:
    """Test Weyl averages along compact extensions."""

    def test_default_panel(self):
        """Test the panel excludes only the zero frequency."""
        panel = default_weyl_panel(1, 1)
        assert len(panel) == 3 * 3 * 3 - 1
        assert ((0, 0), (0,)) not in panel

    def test_base_frequency_decays(self, pair):
        """Test a pure base character averages to nearly zero."""
        report = weyl_probe(
            get_map("delta0"), pair, ["sqrt(5)-2"], [((1, 0), (0,)), ((0, 1), (1,))], 10**5,
            seed=1,
        )
        assert report.N == 10**5
        assert len(report.rows) == 2
        first = report.rows[0]
        assert first.checkpoints == (25000, 50000, 100000)
        assert first.final_average < 1e-3
        assert all(0.0 <= e <= 1.0 for e in report.rows[1].envelope)

    def test_rejections(self, pair, psi, golden):
        """Test short orbits, real maps and the zero frequency are rejected."""
        delta0 = get_map("delta0")
        with pytest.raises(ValueError):
            weyl_probe(delta0, pair, ["sqrt(5)-2"], [((1, 0), (0,))], 1000)
        with pytest.raises(ValueError):
            weyl_probe(psi, golden, ["sqrt(5)-2"], [((1,), (0,))], 10**5)
        with pytest.raises(ValueError):
            weyl_probe(delta0, pair, ["sqrt(5)-2"], [((0, 0), (0,))], 10**5)


class TestConjugation:
    """Test the shear conjugating the two triangle cocycles."""

    def test_identity_holds(self, pair):
        """Test residuals stay at rounding level."""
        report = conjugation_check(pair, "sqrt(5)-2", samples=10_000, seed=11)
        assert report.samples == 10_000
        assert 0 <= report.skipped < 100
        assert report.max_residual < 1e-12

    def test_single_point(self, pair):
        """Test a point away from the triangle boundaries."""
        assert conjugation_residual(pair, "sqrt(5)-2", (0.2, 0.3, 0.4)) < 1e-12

    def test_boundary_point(self, pair):
        """Test u1 + u2 = 1 is refused."""
        with pytest.raises(BoundaryHitError):
            conjugation_residual(pair, "sqrt(5)-2", (0.25, 0.75, 0.4))

    def test_needs_two_dimensions(self, golden):
        """Test circle rotations are rejected."""
        with pytest.raises(ValueError):
            conjugation_check(golden, "sqrt(5)-2", samples=10)


class TestInducedCocycle:
    """Test return times and induced sums."""

    def test_returns_and_identity(self, psi, golden):
        """Test induced sums equal direct ergodic sums at the return times."""
        induced = induced_cocycle(psi, golden, [((0.0, 0.5),)], (0.1,), 10)
        assert len(induced.return_times) == 10
        assert list(induced.return_times) == sorted(set(induced.return_times))
        assert induced.identity_error < 1e-9
        assert induced.base_measure == 0.5
        assert induced.mean_return == induced.return_times[-1] / 10
        for R, value in zip(induced.return_times, induced.induced_sums):
            direct = ergodic_sum(psi, golden, (0.1,), R).value
            assert value[0] == pytest.approx(direct[0], abs=1e-9)

    def test_returns_land_in_base(self, psi, golden):
        """Test every return time lands in the base set."""
        a = (math.sqrt(5) - 1) / 2
        induced = induced_cocycle(psi, golden, [((0.0, 0.5),)], (0.1,), 5)
        for R in induced.return_times:
            assert (0.1 + R * a) % 1.0 < 0.5

    def test_start_outside(self, psi, golden):
        """Test a start point outside the base is rejected."""
        with pytest.raises(ValueError):
            induced_cocycle(psi, golden, [((0.0, 0.5),)], (0.7,), 3)

    def test_timeout(self, psi, golden):
        """Test a tiny base set exhausts the step cap."""
        with pytest.raises(ReturnTimeoutError):
            induced_cocycle(psi, golden, [((0.0, 1e-9),)], (5e-10,), 1, cap=100)
