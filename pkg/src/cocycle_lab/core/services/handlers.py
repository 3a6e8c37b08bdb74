"""Command handlers: one function per subcommand.

Handlers read parameters from the run context, call the domain modules and
stage CSV, JSON and SVG artifacts. They never write files themselves.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from typing import Any

import numpy as np

from ...output.svg import emit_svg
from ...utils.exceptions import ConfigurationError, PrecisionError
from ...utils.logging import get_logger
from ...utils.precision import to_mpf
from ..diophantine import (
    bad_margin,
    convergent_bound_check,
    convergents,
    expand_cf,
    ostrowski,
    series_plateau,
    type_probe,
)
from ..dynamics import (
    check_mean,
    ergodic_series,
    gamma_closed_forms,
    grid_mean,
    lambda_functionals,
    linear_deviation_check,
    log_schedule,
    sandwich_threshold,
    shadow_audit,
)
from ..engine import Handler, RunContext
from ..fourier import (
    coboundary_solve,
    decay_bound_check,
    l2_sum_growth,
    niederreiter_plateau,
    spectrum_of_map,
    triangle_coeff,
    triangle_coeff_quadrature,
    triangle_spectrum,
)
from ..models import ConvergentTable, FiberMode, FourierSpectrum, TriangleSpec
from ..partition import (
    build_partition,
    check_discontinuity_hypothesis,
    check_eqfunct_hypotheses,
    eqfunct_schedule,
    export_partition_json,
    gap_stats,
    geometry_report,
    schmidt_exponent_probe,
)
from ..probes import (
    Box,
    conjugation_check,
    default_weyl_panel,
    essential_value_probe,
    fiber_histogram,
    full_torus,
    induced_cocycle,
    l2_growth_probe,
    recurrence_probe,
    simulate_skew,
    weyl_probe,
)
from ..values import parse_value, split_values

logger = get_logger(__name__)

HANDLERS: dict[str, Handler] = {}

DEFAULT_X0 = (0.3, 0.7)
SHADOW_LIMIT = 10**5


def command(name: str) -> Callable[[Handler], Handler]:
    """Register a handler under a subcommand name."""

    def register(func: Handler) -> Handler:
        HANDLERS[name] = func
        return func

    return register


# Parameter parsing


def parse_floats(value: Any) -> list[float]:
    """Comma-separated values (or a list) as floats."""
    items = split_values(value) if isinstance(value, str) else list(value)
    return [float(to_mpf(parse_value(item))) for item in items]


def parse_ints(value: Any) -> list[int]:
    items = split_values(value) if isinstance(value, str) else list(value)
    try:
        return [int(item) for item in items]
    except ValueError as e:
        raise ConfigurationError(f"Expected integers, got {value!r}") from e


def parse_forms(value: Any) -> list[list[int]]:
    """Integer vectors separated by semicolons, e.g. "1,0;0,1"."""
    if isinstance(value, str):
        return [parse_ints(part) for part in value.split(";") if part.strip()]
    return [parse_ints(part) for part in value]


def parse_boxes(value: Any, rho: int) -> list[Box]:
    """Boxes "lo1,hi1[,lo2,hi2]" (one string per box); the torus when absent."""
    if not value:
        return full_torus(rho)
    boxes = []
    for text in [value] if isinstance(value, str) else value:
        bounds = parse_floats(text)
        if len(bounds) != 2 * rho:
            raise ConfigurationError(f"Box {text!r} needs {2 * rho} bounds")
        boxes.append(tuple((bounds[2 * i], bounds[2 * i + 1]) for i in range(rho)))
    return boxes


def _start_point(ctx: RunContext, rho: int, name: str = "x0") -> tuple[float, ...]:
    raw = ctx.param(name)
    point = tuple(parse_floats(raw)) if raw is not None else DEFAULT_X0[:rho]
    if len(point) != rho:
        raise ConfigurationError(f"--{name} needs {rho} coordinates")
    return point


def _spectrum(ctx: RunContext, h_max: int) -> tuple[FourierSpectrum, TriangleSpec | None]:
    triangle = ctx.param("triangle")
    if triangle is not None:
        tri = TriangleSpec(*parse_floats(triangle))
        centered = not ctx.param("uncentered", False)
        return triangle_spectrum(tri, h_max, centered=centered), tri
    map_ = ctx.map()
    return spectrum_of_map(map_, h_max), map_.region


def fitted_slope(xs: Any, ys: Any) -> float | None:
    """Least-squares slope of log y against log x over positive pairs."""
    pairs = [(x, y) for x, y in zip(xs, ys, strict=True) if x > 0 and y > 0]
    if len(pairs) < 2:
        return None
    logs = np.log(np.asarray(pairs, dtype=np.float64))
    return float(np.polyfit(logs[:, 0], logs[:, 1], 1)[0])


# Diophantine commands


def covering_table(value: Any, n: int, precision_bits: int) -> ConvergentTable:
    """Convergent table whose last denominator exceeds n.

    Raises:
        PrecisionError: If the expansion runs out of precision first
    """
    depth = 8
    while True:
        cf = expand_cf(value, depth, precision_bits)
        table = convergents(cf, cf.depth + 1)
        if table.q[-1] > n:
            return table
        if cf.precision_exhausted:
            raise PrecisionError(f"Precision exhausted before q_k exceeded {n}")
        depth *= 2


@command("cf")
def run_cf(ctx: RunContext) -> None:
    """Partial quotients and convergents."""
    depth = int(ctx.param("depth", 20))
    cf = expand_cf(ctx.require("value"), depth, ctx.bits)
    table = convergents(cf, min(depth, cf.depth + 1))
    bound = convergent_bound_check(table)
    ctx.writer.add_json("cf.json", {"expansion": cf, "convergents": table, "bound_max": bound})
    rows = []
    for n in range(table.depth):
        a_n = cf.quotients[n - 1] if n else 0
        chain = table.chain[n] if n < len(table.chain) else float("nan")
        rows.append([n, a_n, table.p[n], table.q[n], chain])
    ctx.writer.add_csv("convergents.csv", ["n", "a_n", "p_n", "q_n", "chain"], rows)
    ctx.summary.update(
        quotients=list(cf.quotients), exhausted=cf.precision_exhausted, period=cf.period
    )


@command("ostrowski")
def run_ostrowski(ctx: RunContext) -> None:
    """Ostrowski digits of n in the convergent denominators of α."""
    n = int(ctx.require("n"))
    table = covering_table(ctx.require("value"), n, ctx.bits)
    digits = ostrowski(n, table)
    ctx.writer.add_json(
        "ostrowski.json",
        {
            "digits": digits,
            "q": table.q,
            "reconstructed": digits.reconstruct(),
            "bounds_ok": digits.satisfies_bounds(),
        },
    )
    ctx.summary.update(n=n, digits=list(digits.digits))


@command("badmargin")
def run_badmargin(ctx: RunContext) -> None:
    margin = bad_margin(
        ctx.require("theta"),
        ctx.param("x", 0),
        q_max=int(ctx.param("q_max", 10_000)),
        q_min=int(ctx.param("q_min", 1)),
        precision_bits=ctx.bits,
        workers=int(ctx.param("workers", 1)),
    )
    ctx.writer.add_json("badmargin.json", margin)
    ctx.summary.update(margin=margin.margin, argmin_q=margin.argmin_q)


@command("typeprobe")
def run_typeprobe(ctx: RunContext) -> None:
    report = type_probe(
        ctx.require("value"),
        float(ctx.param("epsilon", 0.1)),
        int(ctx.param("q_max", 10**6)),
        eta=float(ctx.param("eta", 1.0)),
        precision_bits=ctx.bits,
    )
    ctx.writer.add_json("typeprobe.json", report)
    ctx.summary.update(inf_low=report.inf_low, inf_high=report.inf_high)


@command("series")
def run_series(ctx: RunContext) -> None:
    """Partial sums of Σ 1/(k^{η+δ}‖kα‖) on a log schedule."""
    schedule = log_schedule(int(ctx.param("k_max", 10**6)), int(ctx.param("per_decade", 10)))
    plateau = series_plateau(
        ctx.require("value"),
        float(ctx.param("eta", 1.0)),
        float(ctx.param("delta", 0.1)),
        schedule,
        ctx.bits,
    )
    ctx.writer.add_csv("series.csv", ["K", "partial_sum", "increment"], plateau.rows)
    ctx.writer.add_json("series.json", plateau)
    ctx.summary.update(final=plateau.rows[-1][1])


# Torus dynamics commands


@command("sums")
def run_sums(ctx: RunContext) -> None:
    """Ergodic sums along one orbit, with optional grid sup and shadow audit."""
    alpha = ctx.rotation()
    map_ = ctx.map(alpha.rho)
    x0 = _start_point(ctx, alpha.rho)
    n_max = int(ctx.param("n_max", 10**6))
    schedule = log_schedule(n_max, int(ctx.param("per_decade", 10)))
    sup_grid = ctx.param("sup_grid")
    series = ergodic_series(
        map_,
        alpha,
        x0,
        schedule,
        sup_grid=int(sup_grid) if sup_grid is not None else None,
        boundary_tol=ctx.config.precision.boundary_tol,
    )
    components = [f"phi_{c + 1}" for c in range(map_.dim)]
    ctx.writer.add_csv("sums.csv", ["n", *components, "sup_grid", "boundary_hits"], series.rows())
    payload: dict[str, Any] = {"series": series, "alpha": alpha}
    if ctx.param("shadow", False):
        payload["shadow"] = shadow_audit(map_, alpha, x0, min(n_max, SHADOW_LIMIT))
    ctx.writer.add_json("sums.json", payload)
    ctx.summary.update(final=series.values[-1].tolist(), boundary_hits=series.boundary_hits)


@command("lambda")
def run_lambda(ctx: RunContext) -> None:
    """λ-functionals by boundary traces and quadrature."""
    map_ = ctx.map()
    functionals = lambda_functionals(map_)
    payload: dict[str, Any] = {
        "map": map_.name,
        "functionals": functionals,
        "mean": check_mean(map_),
        "grid_mean": grid_mean(map_),
    }
    if map_.name.startswith("gamma"):
        payload["closed_forms"] = gamma_closed_forms(
            map_.params["gamma1"], map_.params["gamma2"]
        )
    ctx.writer.add_json("lambda.json", payload)
    ctx.summary.update(lambda1=functionals.lambda1, det_M=functionals.det_M)


@command("sandwich")
def run_sandwich(ctx: RunContext) -> None:
    alpha = ctx.rotation()
    map_ = ctx.map(alpha.rho)
    schedule = log_schedule(int(ctx.param("n_max", 10**4)), 4)
    threshold, reports = sandwich_threshold(
        map_, alpha, schedule, int(ctx.param("samples", 1000)), ctx.seed
    )
    ctx.writer.add_csv(
        "sandwich.csv",
        ["n", "samples", "pass_fraction", "ratio_min", "ratio_max"],
        [[r.n, r.samples, r.pass_fraction, r.ratio_min, r.ratio_max] for r in reports],
    )
    ctx.writer.add_json("sandwich.json", {"threshold": threshold, "reports": reports})
    ctx.summary.update(threshold=threshold)


@command("deviation")
def run_deviation(ctx: RunContext) -> None:
    """First-order expansion of φ_n along two-sided same-cell moves."""
    alpha = ctx.rotation()
    map_ = ctx.map(alpha.rho)
    samples = int(ctx.param("samples", 1000))
    tolerance = float(ctx.param("tolerance", 0.1))
    lambda_matrix = lambda_functionals(map_).boundary
    reports = [
        linear_deviation_check(map_, alpha, n, samples, ctx.seed, tolerance, lambda_matrix)
        for n in log_schedule(int(ctx.param("n_max", 10**4)), 4)
    ]
    ctx.writer.add_csv(
        "deviation.csv",
        ["n", "samples", "pass_fraction", "max_error", "mean_error"],
        [[r.n, r.samples, r.pass_fraction, r.max_error, r.mean_error] for r in reports],
    )
    ctx.writer.add_json("deviation.json", {"lambda_matrix": lambda_matrix, "reports": reports})
    ctx.summary.update(
        threshold=next((r.n for r in reports if r.pass_fraction == 1.0), None),
        max_error=reports[-1].max_error,
    )


# Fourier commands


@command("fourier")
def run_fourier(ctx: RunContext) -> None:
    """Spectrum table, decay fit and an optional quadrature cross-check."""
    h_max = int(ctx.param("h_max", ctx.config.fourier.h_max))
    spectrum, tri = _spectrum(ctx, h_max)
    payload: dict[str, Any] = {
        "label": spectrum.label,
        "h_max": h_max,
        "hermitian_defect": spectrum.hermitian_defect(),
    }
    if spectrum.decay_forms:
        payload["decay"] = decay_bound_check(spectrum)
    verify = int(ctx.param("verify", 0))
    if verify and tri is not None:
        payload["quadrature_max_delta"] = triangle_quadrature_delta(
            tri, verify, ctx.config.fourier.quad_tol
        )
    ctx.writer.add_csv("spectrum.csv", ["h1", "h2", "re", "im"], spectrum.rows())
    ctx.writer.add_json("fourier.json", payload)
    ctx.summary.update(label=spectrum.label, coefficients=len(spectrum.index))


def triangle_quadrature_delta(tri: TriangleSpec, bound: int, tol: float) -> float:
    """max |closed form − quadrature| over |s|, |t| ≤ bound."""
    worst = 0.0
    for s in range(-bound, bound + 1):
        for t in range(-bound, bound + 1):
            closed = complex(triangle_coeff(tri, s, t))
            oracle = triangle_coeff_quadrature(tri, s, t, tol)
            worst = max(worst, abs(closed - oracle))
    return worst


def _powers_of_two(lo: int, hi: int) -> list[int]:
    start, stop = max(0, math.ceil(math.log2(lo))), math.floor(math.log2(hi))
    return [2**j for j in range(start, stop + 1)]


@command("growth")
def run_growth(ctx: RunContext) -> None:
    """Exact L² growth of Σ φ∘T^k with both upper bounds."""
    alpha = ctx.rotation()
    spectrum, _ = _spectrum(ctx, int(ctx.param("h_max", 64)))
    schedule = _powers_of_two(int(ctx.param("n_min", 16)), int(ctx.param("n_max", 2**14)))
    table = l2_sum_growth(
        spectrum, alpha, schedule, float(ctx.param("t", 1.5)), ctx.config.fourier.resonance_guard
    )
    ctx.writer.add_csv("growth.csv", ["N", "exact", "min_bound", "tail_bound"], table.rows)
    ctx.writer.add_json("growth.json", table)
    ctx.summary.update(fitted_exponent=table.fitted_exponent)


@command("niederreiter")
def run_niederreiter(ctx: RunContext) -> None:
    alpha = ctx.rotation()
    forms = parse_forms(ctx.param("forms", "1,0;0,1"))
    h_max = int(ctx.param("h_max", 64))
    plateau = niederreiter_plateau(
        alpha,
        forms,
        float(ctx.param("t", 1.5)),
        sorted({*_powers_of_two(1, h_max), h_max}),
        ctx.config.fourier.resonance_guard,
    )
    ctx.writer.add_csv("niederreiter.csv", ["H", "sum", "relative_increment"], plateau.rows)
    ctx.writer.add_json("niederreiter.json", plateau)
    ctx.summary.update(final=plateau.rows[-1][1])


@command("coboundary")
def run_coboundary(ctx: RunContext) -> None:
    """Solve ψ∘T − ψ = φ on T¹ from the spectrum of φ."""
    alpha = ctx.rotation()
    map_ = ctx.map(1, default="quadratic")
    h_max = int(ctx.param("h_max", 1000))
    spectrum = spectrum_of_map(map_, h_max)

    def evaluator(xs: np.ndarray) -> np.ndarray:
        return map_.evaluate_array(xs[:, None])[:, 0]

    result = coboundary_solve(
        spectrum,
        alpha,
        h_max,
        ctx.config.fourier.resonance_guard,
        int(ctx.param("grid", 10_000)),
        evaluator,
    )
    ctx.writer.add_csv("coboundary.csv", ["n", "pad", "re", "im"], result.psi.rows())
    ctx.writer.add_json("coboundary.json", result)
    ctx.summary.update(residual=result.residual, exact_residual=result.exact_residual)


# Partition commands


@command("partition")
def run_partition(ctx: RunContext) -> None:
    """Build P_ℓ (or R_ℓ) and stage its summary, export and SVG."""
    alpha = ctx.rotation()
    ell = int(ctx.require("ell"))
    partition = build_partition(
        alpha,
        ell,
        include_diagonals=not ctx.param("no_diagonals", False),
        incidence_tol=ctx.config.partition.incidence_tol,
    )
    geometry = geometry_report(partition)
    ctx.writer.add_json(
        "partition.json",
        {
            "ell": ell,
            "alpha": alpha,
            "cells": partition.card,
            "expected": partition.expected_card,
            "geometry": geometry,
        },
    )
    if ctx.param("export", False):
        ctx.writer.add_json("partition_cells.json", export_partition_json(partition))
    svg_path = ctx.param("svg")
    if svg_path:
        size = int(ctx.param("svg_size", ctx.config.partition.svg_size))
        ctx.writer.add_text(svg_path, emit_svg(partition, ctx.param("style", "lines"), size))
    ctx.summary.update(cells=partition.card, euler=geometry["euler"])


@command("eqfunct")
def run_eqfunct(ctx: RunContext) -> None:
    """The five structural checks on a sequence of partitions."""
    alpha = ctx.rotation()
    ells_param = ctx.param("ells")
    ells = parse_ints(ells_param) if ells_param else eqfunct_schedule(
        alpha, int(ctx.param("count", 6))
    )
    settings = ctx.config.partition
    partitions = [build_partition(alpha, ell, True, settings.incidence_tol) for ell in ells]
    report = check_eqfunct_hypotheses(
        partitions,
        edge_factor=float(ctx.param("edge_factor", settings.vertical_edge_factor)),
        neighbor_bound=int(ctx.param("neighbor_bound", settings.neighbor_bound)),
    )
    ctx.writer.add_csv(
        "eqfunct.csv",
        ["ell", "cells", "max_diameter", "max_neighbors", "c2_hat",
         "min_area_times_card", "family_size", "family_fraction", "one_letter_ok"],
        [
            [r.ell, r.cells, r.max_diameter, r.max_neighbors, r.c2_hat,
             r.min_area_times_card, r.family_size, r.family_fraction, r.one_letter_ok]
            for r in report.rows
        ],
    )
    ctx.writer.add_json("eqfunct.json", report)
    ctx.summary.update(checks=report.checks, passed=report.passed)


@command("gaps")
def run_gaps(ctx: RunContext) -> None:
    """Gap statistics of {β_j − kα₁} on a log schedule of n."""
    alpha1 = split_values(ctx.require("alpha"))[0]
    betas = split_values(ctx.param("betas", "0"))
    rows = [
        gap_stats(alpha1, betas, n, ctx.bits)
        for n in log_schedule(int(ctx.param("n_max", 10**4)), int(ctx.param("per_decade", 10)))
    ]
    ctx.writer.add_csv(
        "gaps.csv",
        ["n", "points", "min_gap", "max_gap", "c_hat", "c_prime_hat", "distinct_gaps"],
        [[g.n, g.points, g.min_gap, g.max_gap, g.c_hat, g.c_prime_hat, g.distinct_gaps]
         for g in rows],
    )
    ctx.writer.add_json("gaps.json", {"betas": betas, "rows": rows})
    ctx.summary.update(c_hat_min=min(g.c_hat for g in rows))


@command("hypothesis")
def run_hypothesis(ctx: RunContext) -> None:
    """Bad_Z margins of the break differences of a map, with its gap constants."""
    alpha = ctx.rotation()
    map_ = ctx.map(alpha.rho)
    report = check_discontinuity_hypothesis(
        map_,
        alpha,
        int(ctx.param("q_max", 10**4)),
        float(ctx.param("floor", 1e-3)),
        precision_bits=ctx.bits,
    )
    ctx.writer.add_csv(
        "hypothesis.csv",
        ["axis", "difference", "margin", "argmin_q"],
        [[m.axis, m.difference, m.margin, m.argmin_q] for m in report.margins],
    )
    ctx.writer.add_json("hypothesis.json", {"holds": report.holds, "report": report})
    ctx.summary.update(
        hypothesis=report.hypothesis,
        holds=report.holds,
        min_margin=report.min_margin,
        c_low=report.c_low,
        c_high=report.c_high,
    )


@command("schmidt")
def run_schmidt(ctx: RunContext) -> None:
    alpha = ctx.rotation()
    records = schmidt_exponent_probe(
        alpha, int(ctx.param("n_max", 10**4)), int(ctx.param("per_decade", 10))
    )
    ctx.writer.add_csv(
        "schmidt.csv",
        ["n", "n1", "n2", "distance", "exponent", "highlighted"],
        [[r.n, r.n1, r.n2, r.distance,
          r.exponent if r.exponent is not None else float("nan"), r.highlighted]
         for r in records],
    )
    ctx.writer.add_json("schmidt.json", records)
    ctx.summary.update(highlighted=[r.n for r in records if r.highlighted])


# Probe commands


@command("skew")
def run_skew(ctx: RunContext) -> None:
    """Skew-product orbit with a real or toral fiber."""
    alpha = ctx.rotation()
    map_ = ctx.map(alpha.rho)
    mode = FiberMode(ctx.param("mode", "real"))
    z0_param = ctx.param("z0")
    z0 = parse_floats(z0_param) if z0_param is not None else [0.0] * map_.dim
    a_param = ctx.param("a")
    decimation = ctx.param("decimation")
    orbit = simulate_skew(
        map_,
        alpha,
        _start_point(ctx, alpha.rho),
        z0,
        int(ctx.param("n", 10**6)),
        mode=mode,
        decimation=int(decimation) if decimation is not None else None,
        a=split_values(a_param) if a_param is not None else None,
        boundary_tol=ctx.config.precision.boundary_tol,
    )
    base = [f"x{i + 1}" for i in range(alpha.rho)]
    fiber = [f"z{c + 1}" for c in range(map_.dim)]
    ctx.writer.add_csv("skew.csv", ["n", *base, *fiber], orbit.rows())
    payload: dict[str, Any] = {"orbit": orbit}
    if mode is FiberMode.TORUS:
        payload["histogram"] = fiber_histogram(orbit, int(ctx.param("bins", 32)))
    ctx.writer.add_json("skew.json", payload)
    ctx.summary.update(samples=len(orbit.times), telescoping_error=orbit.telescoping_error)


@command("recur")
def run_recur(ctx: RunContext) -> None:
    """Near returns of φ_n to zero from random base points."""
    alpha = ctx.rotation()
    map_ = ctx.map(alpha.rho)
    report = recurrence_probe(
        map_,
        alpha,
        int(ctx.param("n_max", 10**6)),
        points=int(ctx.param("points", 100)),
        radii=ctx.config.probes.radii,
        seed=ctx.seed,
    )
    ctx.writer.add_csv(
        "recurrence.csv",
        ["point", "min_abs", "stagnant"],
        [[i, float(m), bool(s)] for i, (m, s) in enumerate(
            zip(report.min_abs, report.stagnant, strict=True))],
    )
    verdict = "transience suspected" if report.stagnant.all() else "recurrence consistent"
    ctx.writer.add_json(
        "recurrence.json",
        {"probe": "recur", "verdict": verdict, "evidence": report,
         "stagnant_fraction": report.stagnant_fraction},
    )
    ctx.summary.update(verdict=verdict, hit_fraction=report.hit_fraction)


@command("l2probe")
def run_l2probe(ctx: RunContext) -> None:
    alpha = ctx.rotation()
    map_ = ctx.map(alpha.rho)
    report = l2_growth_probe(
        map_,
        alpha,
        log_schedule(int(ctx.param("n_max", 10**4)), int(ctx.param("per_decade", 4))),
        points=int(ctx.param("points", 1000)),
        seed=ctx.seed,
        bootstrap=ctx.config.probes.bootstrap,
    )
    ctx.writer.add_csv("l2probe.csv", ["N", "l2_norm"], list(zip(report.schedule, report.norms)))
    ctx.writer.add_json(
        "l2probe.json", {"probe": "l2probe", "verdict": report.verdict, "evidence": report}
    )
    ctx.summary.update(slope=report.slope, ci=report.ci, verdict=report.verdict)


@command("essval")
def run_essval(ctx: RunContext) -> None:
    """Grid events x ∈ B, T^n x ∈ B, φ_n(x) ∈ V."""
    alpha = ctx.rotation()
    map_ = ctx.map(alpha.rho)
    window = parse_floats(ctx.require("window"))
    if len(window) != 2:
        raise ConfigurationError("--window needs two bounds")
    n_param = ctx.param("n_list")
    n_list = parse_ints(n_param) if n_param else log_schedule(
        int(ctx.param("n_max", 10**5)), int(ctx.param("per_decade", 10))
    )
    report = essential_value_probe(
        map_,
        alpha,
        parse_boxes(ctx.param("box"), alpha.rho),
        (window[0], window[1]),
        n_list,
        grid=int(ctx.param("grid", ctx.config.probes.grid)),
        absolute=not ctx.param("signed", False),
    )
    ctx.writer.add_csv("essval.csv", ["n", "hit_fraction"], report.hits)
    ctx.writer.add_json(
        "essval.json",
        {"probe": "essval", "positive": report.positive, "evidence": report},
    )
    ctx.summary.update(positive=len(report.positive), sampled=len(report.hits))


@command("weyl")
def run_weyl(ctx: RunContext) -> None:
    """Weyl averages of the compact extension over a frequency panel."""
    alpha = ctx.rotation()
    map_ = ctx.map(alpha.rho, default="delta0")
    frequency = ctx.param("frequency")
    if frequency:
        panel = []
        for text in [frequency] if isinstance(frequency, str) else frequency:
            h, k = parse_forms(text)
            panel.append((tuple(h), tuple(k)))
    else:
        probes = ctx.config.probes
        panel = default_weyl_panel(probes.weyl_h_max, probes.weyl_k_max, alpha.rho, map_.dim)
    x0, y0 = ctx.param("x0"), ctx.param("y0")
    report = weyl_probe(
        map_,
        alpha,
        split_values(ctx.require("a")),
        panel,
        int(ctx.param("n", 4 * 10**5)),
        x0=parse_floats(x0) if x0 is not None else None,
        y0=parse_floats(y0) if y0 is not None else None,
        seed=ctx.seed,
    )
    ctx.writer.add_csv(
        "weyl.csv",
        ["h", "k", "envelope_quarter", "envelope_half", "envelope_full",
         "final_average", "decay_ratio"],
        [
            [" ".join(map(str, r.h)), " ".join(map(str, r.k)), *r.envelope,
             r.final_average, r.decay_ratio]
            for r in report.rows
        ],
    )
    ctx.writer.add_json("weyl.json", report)
    ctx.summary.update(
        rows=len(report.rows), min_decay_ratio=min(r.decay_ratio for r in report.rows)
    )


@command("conjugation")
def run_conjugation(ctx: RunContext) -> None:
    alpha = ctx.rotation()
    report = conjugation_check(
        alpha, ctx.require("a"), int(ctx.param("samples", 100_000)), ctx.seed
    )
    ctx.writer.add_json("conjugation.json", report)
    ctx.summary.update(max_residual=report.max_residual, skipped=report.skipped)


@command("induced")
def run_induced(ctx: RunContext) -> None:
    """Return times to a box union and the induced sums."""
    alpha = ctx.rotation()
    map_ = ctx.map(alpha.rho)
    boxes = parse_boxes(ctx.param("box"), alpha.rho)
    x0_param = ctx.param("x0")
    if x0_param is not None:
        x0 = tuple(parse_floats(x0_param))
    else:
        x0 = tuple((lo + hi) / 2 for lo, hi in boxes[0])
    result = induced_cocycle(
        map_,
        alpha,
        boxes,
        x0,
        int(ctx.param("returns", 1000)),
        cap=int(ctx.param("cap", ctx.config.probes.return_cap)),
    )
    ctx.writer.add_csv(
        "induced.csv",
        ["m", "return_time", *[f"phi_{c + 1}" for c in range(map_.dim)]],
        [[m + 1, r, *result.induced_sums[m].tolist()]
         for m, r in enumerate(result.return_times)],
    )
    ctx.writer.add_json("induced.json", result)
    ctx.summary.update(mean_return=result.mean_return, base_measure=result.base_measure)


__all__ = ["HANDLERS", "command", "parse_boxes", "parse_floats", "parse_forms", "parse_ints"]
