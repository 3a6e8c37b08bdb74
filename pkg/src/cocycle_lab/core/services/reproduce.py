"""Acceptance suites behind ``cocycle-lab reproduce``.

Each suite runs a fixed experiment and returns one CriterionResult per
measured criterion, with the measured value and the threshold it was held
against.
"""

from __future__ import annotations

import time
from collections.abc import Callable
from typing import Any

import numpy as np

from ...output.svg import emit_svg
from ...utils.exceptions import (
    ConfigurationError,
    CriterionFailure,
    DegeneracyError,
    PrecisionError,
)
from ...utils.logging import get_logger, log_duration
from ..diophantine import convergent_bound_check, convergents, expand_cf
from ..dynamics import (
    SUP_GRID_MIN,
    gamma_closed_forms,
    lambda_functionals,
    log_schedule,
    make_rotation,
    sawtooth_orbit_sums,
    sup_over_grid,
    triangle_identity_sweep,
)
from ..engine import RunContext
from ..fourier import (
    coboundary_solve,
    l2_sum_growth,
    niederreiter_plateau,
    quadratic_spectrum,
    quadratic_tail_bound,
    triangle_spectrum,
)
from ..maps import get_map
from ..models import (
    CoboundaryResult,
    CriterionResult,
    GrowthTable,
    NiederreiterPlateau,
    SuiteReport,
    TriangleSpec,
)
from ..partition import build_partition, check_eqfunct_hypotheses, eqfunct_schedule
from ..probes import (
    conjugation_check,
    default_weyl_panel,
    essential_value_probe,
    full_torus,
    weyl_probe,
)
from .handlers import command, covering_table, fitted_slope, triangle_quadrature_delta

logger = get_logger(__name__)

ALGEBRAIC_PAIR = "sqrt(2)-1, sqrt(3)-1"
FIGURE_PAIR = "sqrt(2), e"
PARTITION_PAIRS = (FIGURE_PAIR, ALGEBRAIC_PAIR, "golden, sqrt(2)-1")
IRRATIONAL_SHIFT = "sqrt(5)-2"
CHAIN_SURDS = ("golden", "sqrt(2)-1", "sqrt(3)-1")
KOKSMA_VALUES = ("golden", "sqrt(2)-1")
FOURIER_TRIANGLES = ((1.0, 1.0, 1.0), (0.7, 0.3, 0.5), (1.0, -0.2, 0.8))
GAMMA_PAIRS = ((1.2, 1.5), (1.1, 1.9), (1.5, 1.5), (1.3, 1.7), (1.8, 1.4))
PLATEAU_BOXES = (64, 128, 256)

Suite = Callable[[RunContext], list[CriterionResult]]
SUITES: dict[str, Suite] = {}


def suite(name: str) -> Callable[[Suite], Suite]:
    def register(func: Suite) -> Suite:
        SUITES[name] = func
        return func

    return register


def criterion(
    name: str, passed: bool, measured: Any, threshold: Any, **detail: Any
) -> CriterionResult:
    result = CriterionResult(name, bool(passed), measured, threshold, detail)
    logger.info(f"{name}: {'PASS' if result.passed else 'FAIL'} (measured {measured})")
    return result


@suite("koksma")
def koksma_suite(ctx: RunContext) -> list[CriterionResult]:
    """Koksma bound at convergent denominators and the convergent chain."""
    results = []
    x = np.random.default_rng(ctx.seed).random(1000)
    for value in KOKSMA_VALUES:
        alpha = make_rotation(value, ctx.bits)
        table = covering_table(value, 10**6, ctx.bits)
        denominators = sorted({q for q in table.q if 1 <= q <= 10**6})
        worst = max(
            float(np.max(np.abs(sawtooth_orbit_sums(alpha, (1,), 0.0, x, q))))
            for q in denominators
        )
        results.append(
            criterion(f"koksma[{value}]", worst <= 1 + 1e-9, worst, 1 + 1e-9,
                      denominators=denominators)
        )
    for value in CHAIN_SURDS:
        try:
            table = convergents(expand_cf(value, 40, ctx.bits), 41)
            bound = convergent_bound_check(table)
        except PrecisionError as e:
            results.append(criterion(f"chain[{value}]", False, str(e), [0.5, 1.0]))
            continue
        chain = table.chain[1:] if table.q[0] == table.q[1] else table.chain
        low, high = min(chain), max(chain)
        results.append(
            criterion(f"chain[{value}]", 0.5 <= low and high <= 1.0, [low, high], [0.5, 1.0],
                      convergent_bound=bound)
        )
    return results


@suite("triangle-identity")
def triangle_identity_suite(ctx: RunContext) -> list[CriterionResult]:
    worst, skipped = triangle_identity_sweep(10**6, ctx.seed)
    return [criterion("triangle-identity", worst < 1e-12, worst, 1e-12, skipped=skipped)]


@suite("partition-counts")
def partition_counts_suite(ctx: RunContext) -> list[CriterionResult]:
    """Exact cell counts of P_ℓ and R_ℓ, and the deterministic ℓ = 20 figure."""
    ell_max = int(ctx.param("ell_max", 40))
    tol = ctx.config.partition.incidence_tol
    results = []
    rows = []
    for pair in PARTITION_PAIRS:
        alpha = make_rotation(pair, ctx.bits)
        failures = []
        for ell in range(1, ell_max + 1):
            measured = []
            for diagonals in (True, False):
                try:
                    measured.append(build_partition(alpha, ell, diagonals, tol).card)
                except DegeneracyError as e:
                    logger.warning(f"ℓ={ell} for ({pair}): {e}")
                    measured.append(-1)
            expected = (3 * ell * ell - ell, ell * ell)
            if tuple(measured) != expected:
                failures.append(ell)
            rows.append([pair, ell, expected[0], measured[0], expected[1], measured[1]])
        results.append(
            criterion(f"counts[{pair}]", not failures, ell_max - len(failures), ell_max,
                      failures=failures)
        )
    ctx.writer.add_csv(
        "partition_counts.csv",
        ["alpha", "ell", "expected_P", "measured_P", "expected_R", "measured_R"],
        rows,
    )

    start = time.time()
    alpha = make_rotation(FIGURE_PAIR, ctx.bits)
    first = emit_svg(build_partition(alpha, 20, True, tol))
    second = emit_svg(build_partition(alpha, 20, True, tol))
    log_duration("figure P_20", time.time() - start)
    ctx.writer.add_text("figure_P20.svg", first)
    cells = first.count("1180 cells")
    results.append(
        criterion("figure[P_20]", first == second and cells == 1, len(first), "identical",
                  deterministic=first == second)
    )
    return results


@suite("eqfunct")
def eqfunct_suite(ctx: RunContext) -> list[CriterionResult]:
    alpha = make_rotation(ALGEBRAIC_PAIR, ctx.bits)
    settings = ctx.config.partition
    ells = eqfunct_schedule(alpha, 6)
    report = check_eqfunct_hypotheses(
        [build_partition(alpha, ell, True, settings.incidence_tol) for ell in ells],
        settings.vertical_edge_factor,
        settings.neighbor_bound,
    )
    return [
        criterion(name, ok, ok, True, ells=ells, fitted_c2=report.fitted_c2)
        for name, ok in sorted(report.checks.items())
    ]


def coboundary_criterion(result: CoboundaryResult) -> CriterionResult:
    """Residual against x(1 − x) − 1/6 held to the tail of the truncated series."""
    bound = quadratic_tail_bound(result.h_max)
    measured = result.exact_residual
    passed = measured is not None and measured <= bound
    return criterion("coboundary[quadratic]", passed, measured, bound,
                     series_residual=result.residual, psi_l1=result.psi_l1)


def l2_chain_criterion(table: GrowthTable) -> CriterionResult:
    """The inequality chain held (l2_sum_growth raises otherwise); growth below N."""
    exponent = table.fitted_exponent
    return criterion("l2-chain", exponent is not None and exponent < 1.0, exponent, 1.0)


def plateau_criterion(plateau: NiederreiterPlateau, tolerance: float = 0.05) -> CriterionResult:
    """Relative increments of the partial sums across the schedule."""
    increments = [row[2] for row in plateau.rows[1:]]
    worst = max((abs(v) for v in increments), default=float("nan"))
    passed = bool(increments) and all(np.isfinite(plateau.sums)) and worst < tolerance
    return criterion("niederreiter-plateau", passed, worst, tolerance,
                     boxes=[row[0] for row in plateau.rows], sums=plateau.sums)


@suite("fourier")
def fourier_suite(ctx: RunContext) -> list[CriterionResult]:
    """Closed-form triangle coefficients against quadrature; a coboundary solve."""
    bound = int(ctx.param("bound", 8))
    results = []
    for a, b, c in FOURIER_TRIANGLES:
        delta = triangle_quadrature_delta(
            TriangleSpec(a, b, c), bound, ctx.config.fourier.quad_tol
        )
        results.append(criterion(f"coefficients[{a:g},{b:g},{c:g}]", delta < 1e-9, delta, 1e-9))

    alpha = make_rotation("sqrt(2)-1", ctx.bits)
    quadratic = get_map("quadratic")
    result = coboundary_solve(
        quadratic_spectrum(1000),
        alpha,
        1000,
        ctx.config.fourier.resonance_guard,
        evaluator=lambda xs: quadratic.evaluate_array(xs[:, None])[:, 0],
    )
    results.append(coboundary_criterion(result))
    return results


@suite("growth")
def growth_suite(ctx: RunContext) -> list[CriterionResult]:
    """L² inequality chain, sup-grid growth and a Niederreiter plateau."""
    alpha = make_rotation(ALGEBRAIC_PAIR, ctx.bits)
    guard = ctx.config.fourier.resonance_guard
    results = []
    spectrum = triangle_spectrum(TriangleSpec(1.0, 1.0, 1.0), 200)
    try:
        table = l2_sum_growth(spectrum, alpha, [2**j for j in range(4, 15)], 1.5, guard)
        results.append(l2_chain_criterion(table))
    except PrecisionError as e:
        results.append(criterion("l2-chain", False, str(e), 1.0))

    grid = int(ctx.param("grid", SUP_GRID_MIN[2]))
    triangle0 = get_map("triangle0")
    schedule = [n for n in log_schedule(10**6, 2) if n >= 100]
    sups = [sup_over_grid(triangle0, alpha, n, grid) for n in schedule]
    slope = fitted_slope(schedule, sups)
    results.append(
        criterion("sup-growth", slope is not None and slope < 0.15, slope, 0.15,
                  schedule=schedule, sups=sups, grid=grid)
    )

    plateau = niederreiter_plateau(alpha, ((1, 0), (0, 1)), 1.5, PLATEAU_BOXES, guard)
    results.append(plateau_criterion(plateau))
    return results


@suite("essential-values")
def essential_values_suite(ctx: RunContext) -> list[CriterionResult]:
    """λ-functionals and essential-value events for {x₁}{x₂} − 1/4."""
    xy = get_map("xy_quarter")
    lambda1 = lambda_functionals(xy).lambda1[0]
    results = [criterion("lambda1[xy_quarter]", abs(lambda1 - 0.5) <= 1e-6, lambda1, 0.5)]

    worst = 0.0
    for g1, g2 in GAMMA_PAIRS:
        functionals = lambda_functionals(get_map(f"gamma({g1},{g2})"))
        closed = gamma_closed_forms(g1, g2)
        quadrature = functionals.quadrature[0]
        worst = max(
            worst,
            abs(quadrature[0] - closed["lambda1"]),
            abs(quadrature[1] - closed["lambda2"]),
        )
    results.append(criterion("gamma-closed-forms", worst <= 1e-6, worst, 1e-6))

    alpha = make_rotation(ALGEBRAIC_PAIR, ctx.bits)
    report = essential_value_probe(
        xy,
        alpha,
        full_torus(2),
        (0.001, 0.002),
        log_schedule(10**5, 10),
        grid=int(ctx.param("grid", ctx.config.probes.grid)),
    )
    results.append(
        criterion("essential-value-events", len(report.positive) >= 5, len(report.positive), 5,
                  positive=report.positive)
    )
    return results


@suite("weyl")
def weyl_suite(ctx: RunContext) -> list[CriterionResult]:
    """Weyl decay for an irrational fiber shift and no decay for a rational one."""
    alpha = make_rotation(ALGEBRAIC_PAIR, ctx.bits)
    delta0 = get_map("delta0")
    N = int(ctx.param("n", 4 * 10**5))
    probes = ctx.config.probes
    panel = default_weyl_panel(probes.weyl_h_max, probes.weyl_k_max, 2, 1)
    report = weyl_probe(delta0, alpha, [IRRATIONAL_SHIFT], panel, N, seed=ctx.seed)
    ratios = [row.decay_ratio for row in report.rows]
    slow = [(row.h, row.k) for row in report.rows if row.decay_ratio < 1.5]
    results = [
        criterion("weyl-decay", not slow, min(ratios), 1.5, non_decaying=slow)
    ]

    rational = weyl_probe(delta0, alpha, ["1/2"], [((0, 0), (2,))], N, seed=ctx.seed)
    row = rational.rows[0]
    stuck = row.decay_ratio < 1.5 and row.final_average > 0.99
    results.append(
        criterion("rational-degenerate", stuck, row.final_average, "no decay",
                  decay_ratio=row.decay_ratio)
    )
    return results


@suite("conjugation")
def conjugation_suite(ctx: RunContext) -> list[CriterionResult]:
    alpha = make_rotation(ALGEBRAIC_PAIR, ctx.bits)
    report = conjugation_check(alpha, IRRATIONAL_SHIFT, 100_000, ctx.seed)
    passed = report.max_residual < 1e-12 and report.skipped < report.samples
    return [
        criterion("conjugation", passed, report.max_residual, 1e-12, skipped=report.skipped)
    ]


def _cell(value: Any) -> Any:
    return value if isinstance(value, (int, float)) else str(value)


def run_suite(ctx: RunContext, name: str) -> SuiteReport:
    """Run one acceptance suite.

    Raises:
        ConfigurationError: If the suite is unknown
    """
    if name not in SUITES:
        raise ConfigurationError(
            f"Unknown suite {name!r}; available: {', '.join(sorted(SUITES))}"
        )
    start = time.time()
    report = SuiteReport(name, SUITES[name](ctx))
    log_duration(f"suite {name}", time.time() - start)
    return report


@command("reproduce")
def run_reproduce(ctx: RunContext) -> None:
    """Run a suite, stage its report and fail with exit code 5 on any FAIL."""
    name = ctx.require("suite")
    report = run_suite(ctx, name)
    ctx.writer.add_json(f"reproduce_{name}.json", report.to_dict())
    ctx.writer.add_csv(
        f"reproduce_{name}.csv",
        ["criterion", "verdict", "measured", "threshold"],
        [
            [c.name, "PASS" if c.passed else "FAIL", _cell(c.measured), _cell(c.threshold)]
            for c in report.criteria
        ],
    )
    ctx.summary.update(suite=name, verdict="PASS" if report.passed else "FAIL")
    if not report.passed:
        failed = [c.name for c in report.criteria if not c.passed]
        raise CriterionFailure(f"Suite {name} failed: {', '.join(failed)}")


__all__ = ["SUITES", "run_suite"]
