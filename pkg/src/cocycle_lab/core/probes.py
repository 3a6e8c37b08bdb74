"""Skew products and finite-sample probes of recurrence and ergodicity.

Each probe turns a measure-theoretic statement into an experiment on a fixed
grid or a seeded Monte-Carlo sample. "Positive measure" means a positive
fraction of grid points; base sets are finite unions of half-open boxes.
Probes report evidence and never decide ergodicity.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterator, Sequence
from typing import Any

import numpy as np
from mpmath import mp

from ..utils.exceptions import BoundaryHitError, ReturnTimeoutError
from ..utils.logging import get_logger
from ..utils.precision import PhaseKernel, fixed_offset, to_mpf, unit_floats
from .dynamics import (
    BATCH_BUDGET,
    _check_dims,
    ergodic_sum,
    form_kernel,
    grid_axes,
    grid_points,
    grid_sums,
    log_schedule,
    orbit_points,
    phase_kernels,
)
from .maps import PiecewisePlanarMap
from .models import (
    ConjugationReport,
    EssentialValueReport,
    FiberMode,
    InducedCocycle,
    L2GrowthReport,
    RecurrenceReport,
    RotationVector,
    SkewOrbit,
    WeylReport,
    WeylRow,
)
from .values import parse_value

logger = get_logger(__name__)

Box = tuple[tuple[float, float], ...]

DEFAULT_RADII = (0.1, 0.05, 0.01, 0.005)
DEFAULT_SEED = 20240601
MAX_SKEW_LENGTH = 10**8
MAX_SAMPLES = 10**6
MIN_WEYL_LENGTH = 10**5
MIN_EVENT_GRID = 1000
_RETURN_QUANTILES = (0.1, 0.5, 0.9)


def _orbit_blocks(
    map_: PiecewisePlanarMap, alpha: RotationVector, points: np.ndarray, n: int
) -> Iterator[tuple[int, np.ndarray, np.ndarray]]:
    """Yield (start, orbit points, values) for steps start … start + b − 1.

    Orbit points have shape (M, b, ρ) and values (M, b, d).
    """
    M = len(points)
    kernels = phase_kernels(alpha)
    block = max(1, BATCH_BUDGET // max(M, 1))
    for start in range(0, n, block):
        k = np.arange(start, min(n, start + block))
        shifts = np.stack([kern.points(k) for kern in kernels], axis=1)
        grid = points[:, None, :] + shifts[None, :, :]
        grid -= np.floor(grid)
        values = map_.evaluate_array(grid.reshape(-1, alpha.rho))
        yield start, grid, values.reshape(M, len(k), map_.dim)


def _fsum_columns(values: np.ndarray) -> np.ndarray:
    return np.array([math.fsum(values[:, c]) for c in range(values.shape[1])])


# Base sets


def in_boxes(points: np.ndarray, boxes: Sequence[Box]) -> np.ndarray:
    """Membership of points in a union of half-open boxes."""
    points = np.atleast_2d(points)
    inside = np.zeros(len(points), dtype=bool)
    for box in boxes:
        hit = np.ones(len(points), dtype=bool)
        for axis, (lo, hi) in enumerate(box):
            hit &= (lo <= points[:, axis]) & (points[:, axis] < hi)
        inside |= hit
    return inside


def boxes_measure(boxes: Sequence[Box]) -> float:
    """Total volume of boxes assumed pairwise disjoint."""
    total = 0.0
    for box in boxes:
        for lo, hi in box:
            if not 0.0 <= lo <= hi <= 1.0:
                raise ValueError(f"Box side [{lo}, {hi}) leaves the unit interval")
        total += math.prod(hi - lo for lo, hi in box)
    return total


def full_torus(rho: int) -> list[Box]:
    return [tuple((0.0, 1.0) for _ in range(rho))]


# Skew products


def simulate_skew(
    map_: PiecewisePlanarMap,
    alpha: RotationVector,
    x0: Sequence[float],
    z0: Sequence[float],
    N: int,
    mode: FiberMode = FiberMode.REAL,
    decimation: int | None = None,
    a: Sequence[Any] | None = None,
    boundary_tol: float = 1e-12,
) -> SkewOrbit:
    """Orbit of (x, z) ↦ (x + α, z + φ(x)) with z in ℝ^d or, scaled by a, in T^d.

    Raises:
        ValueError: On a length beyond 10**8 or too fine a decimation
    """
    _check_dims(map_, alpha)
    if not 1 <= N <= MAX_SKEW_LENGTH:
        raise ValueError(f"Orbit length must be in [1, {MAX_SKEW_LENGTH}]")
    if decimation is None:
        decimation = max(1, math.ceil(N / MAX_SAMPLES))
    if decimation < 1 or decimation < N / MAX_SAMPLES:
        raise ValueError(f"Decimation {decimation} keeps more than {MAX_SAMPLES} samples")
    if len(z0) != map_.dim:
        raise ValueError(f"Fiber start needs {map_.dim} coordinates")
    if mode is FiberMode.TORUS and (a is None or len(a) != map_.dim):
        raise ValueError(f"Torus fibers need a translation vector of length {map_.dim}")

    times = np.unique(np.append(np.arange(0, N + 1, decimation), N))
    sums = np.zeros((len(times), map_.dim))
    running = np.zeros(map_.dim)
    hits = 0
    start_point = np.asarray([x0], dtype=np.float64)
    for start, grid, values in _orbit_blocks(map_, alpha, start_point, N):
        values = values[0]
        hits += int(np.count_nonzero(map_.boundary_distance(grid[0]) < boundary_tol))
        prefix = running + np.vstack([np.zeros(map_.dim), np.cumsum(values, axis=0)])
        stop = start + len(values)
        pick = (times > start) & (times <= stop)
        if start == 0:
            pick |= times == 0
        sums[pick] = prefix[times[pick] - start]
        running = prefix[-1]
    reference = ergodic_sum(map_, alpha, x0, N).value
    telescoping = float(np.max(np.abs(sums[-1] - reference)))
    if telescoping > 1e-9 * N:
        logger.warning(f"Telescoping error {telescoping:.3g} exceeds 1e-9·N")

    if mode is FiberMode.REAL:
        fiber = np.asarray(z0, dtype=np.float64) + sums
    elif map_.integer_valued:
        counts = np.rint(sums).astype(np.int64)
        with mp.workprec(alpha.precision_bits):
            fiber = np.stack(
                [
                    PhaseKernel(parse_value(ac, alpha.precision_bits)).points(counts[:, c], z0[c])
                    for c, ac in enumerate(a)
                ],
                axis=1,
            )
    else:
        shifts = np.asarray([float(to_mpf(parse_value(ac))) for ac in a])
        fiber = np.asarray(z0, dtype=np.float64) + shifts * sums
        fiber -= np.floor(fiber)

    return SkewOrbit(
        mode=mode,
        N=N,
        decimation=decimation,
        times=times,
        base=orbit_points(alpha, x0, times),
        fiber=fiber,
        boundary_hits=hits,
        telescoping_error=telescoping,
    )


def fiber_histogram(orbit: SkewOrbit, bins: int = 32) -> dict[str, Any]:
    """Histogram of torus-fiber samples and its largest deviation from uniform."""
    if orbit.mode is not FiberMode.TORUS:
        raise ValueError("Fiber histograms need a torus fiber")
    counts = [
        np.histogram(orbit.fiber[:, c], bins=bins, range=(0.0, 1.0))[0]
        for c in range(orbit.fiber.shape[1])
    ]
    total = len(orbit.fiber)
    deviation = max(float(np.max(np.abs(row * bins / total - 1.0))) for row in counts)
    return {
        "bins": bins,
        "samples": total,
        "counts": [row.tolist() for row in counts],
        "max_deviation": deviation,
    }


# Recurrence and growth


def recurrence_probe(
    map_: PiecewisePlanarMap,
    alpha: RotationVector,
    n_max: int,
    points: int = 100,
    radii: Sequence[float] = DEFAULT_RADII,
    seed: int = DEFAULT_SEED,
    checkpoints: Sequence[int] | None = None,
) -> RecurrenceReport:
    """Near returns of φ_n to 0 for random base points.

    A point is flagged stagnant when |φ_n| stays above the largest radius
    for every n in the second half of the run.
    """
    _check_dims(map_, alpha)
    if points < 100:
        raise ValueError("The recurrence probe needs at least 100 base points")
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    radii = tuple(sorted(radii, reverse=True))
    schedule = tuple(t for t in (checkpoints or log_schedule(n_max, 4)) if 1 <= t <= n_max)
    rng = np.random.default_rng(seed)
    base = rng.random((points, alpha.rho))

    running = np.zeros((points, map_.dim))
    min_abs = np.full(points, np.inf)
    late_min = np.full(points, np.inf)
    first_hit = np.full((len(radii), points), -1, dtype=np.int64)
    profile = np.empty((len(schedule), points))
    half = n_max // 2
    for start, _, values in _orbit_blocks(map_, alpha, base, n_max):
        sums = running[:, None, :] + np.cumsum(values, axis=1)
        running = sums[:, -1, :]
        norms = np.linalg.norm(sums, axis=2)
        steps = np.arange(start + 1, start + 1 + norms.shape[1])
        for ci, t in enumerate(schedule):
            if start < t <= steps[-1]:
                profile[ci] = np.minimum(min_abs, norms[:, : t - start].min(axis=1))
        min_abs = np.minimum(min_abs, norms.min(axis=1))
        late = steps > half
        if late.any():
            late_min = np.minimum(late_min, norms[:, late].min(axis=1))
        for r, radius in enumerate(radii):
            pending = np.flatnonzero(first_hit[r] < 0)
            if pending.size == 0:
                continue
            hit = norms[pending] < radius
            found = hit.any(axis=1)
            first_hit[r, pending[found]] = steps[np.argmax(hit[found], axis=1)]

    stagnant = late_min > radii[0]
    hit_fraction = {}
    quantiles = {}
    for r, radius in enumerate(radii):
        key = f"{radius:g}"
        times = first_hit[r][first_hit[r] > 0]
        hit_fraction[key] = times.size / points
        quantiles[key] = (
            [float(q) for q in np.quantile(times, _RETURN_QUANTILES)] if times.size else []
        )
    if stagnant.any():
        logger.info(f"{int(stagnant.sum())} of {points} points look transient for {map_.name}")
    return RecurrenceReport(
        N_max=n_max,
        points=points,
        radii=radii,
        min_abs=min_abs,
        stagnant=stagnant,
        hit_fraction=hit_fraction,
        return_quantiles=quantiles,
        profile_schedule=schedule,
        profile=profile,
    )


def _batch_sums_at(
    map_: PiecewisePlanarMap, alpha: RotationVector, base: np.ndarray, schedule: Sequence[int]
) -> np.ndarray:
    """φ_N at every base point for each N of an increasing schedule, shape (S, M, d)."""
    out = np.zeros((len(schedule), len(base), map_.dim))
    running = np.zeros((len(base), map_.dim))
    for start, _, values in _orbit_blocks(map_, alpha, base, schedule[-1]):
        head = running[:, None, :]
        prefix = np.concatenate([head, head + np.cumsum(values, axis=1)], axis=1)
        stop = start + values.shape[1]
        for s, n in enumerate(schedule):
            if start < n <= stop:
                out[s] = prefix[:, n - start, :]
        running = prefix[:, -1, :]
    return out


def l2_growth_probe(
    map_: PiecewisePlanarMap,
    alpha: RotationVector,
    schedule: Sequence[int],
    points: int = 1000,
    seed: int = DEFAULT_SEED,
    bootstrap: int = 200,
) -> L2GrowthReport:
    """Fitted exponent of the Monte-Carlo L² norm of φ_N against N.

    The verdict is "consistent" when the upper bootstrap bound of the slope
    stays below 1/d.
    """
    _check_dims(map_, alpha)
    if points < 1000:
        raise ValueError("The L² probe needs at least 1000 sample points")
    marks = sorted({int(n) for n in schedule})
    if len(marks) < 2 or marks[0] < 1:
        raise ValueError("The schedule needs two or more positive lengths")
    rng = np.random.default_rng(seed)
    base = rng.random((points, alpha.rho))
    sums = _batch_sums_at(map_, alpha, base, marks)
    squares = np.sum(sums**2, axis=2)
    norms = np.sqrt(squares.mean(axis=1))
    log_n = np.log(np.asarray(marks, dtype=np.float64))

    positive = norms > 0
    if positive.sum() < 2:
        slope, ci = 0.0, (0.0, 0.0)
    else:
        slope = float(np.polyfit(log_n[positive], np.log(norms[positive]), 1)[0])
        picks = rng.integers(0, points, size=(bootstrap, points))
        resampled = np.sqrt(squares[positive][:, picks].mean(axis=2))
        slopes = np.polyfit(log_n[positive], np.log(np.maximum(resampled, 1e-300)), 1)[0]
        ci = (float(np.percentile(slopes, 2.5)), float(np.percentile(slopes, 97.5)))
    verdict = "consistent" if ci[1] < 1.0 / map_.dim else "inconclusive"
    return L2GrowthReport(
        schedule=tuple(marks),
        norms=tuple(float(v) for v in norms),
        slope=slope,
        ci=ci,
        cocycle_dim=map_.dim,
        verdict=verdict,
    )


def harmonic_l2_norm(alpha: RotationVector, h: Sequence[int], N: int) -> float:
    """‖φ_N‖₂ for φ = cos 2π⟨h, x⟩, that is |D_N(⟨h, α⟩)| / √2."""
    if len(h) != alpha.rho:
        raise ValueError("Frequency and rotation dimensions differ")
    if not any(h):
        return float(N)
    with mp.workprec(alpha.precision_bits):
        theta = mp.fsum(k * c for k, c in zip(h, alpha.components, strict=True))
        dirichlet = abs(mp.sin(mp.pi * N * theta) / mp.sin(mp.pi * theta))
        return float(dirichlet / mp.sqrt(2))


# Essential values


def essential_value_probe(
    map_: PiecewisePlanarMap,
    alpha: RotationVector,
    boxes: Sequence[Box],
    window: tuple[float, float],
    n_list: Sequence[int],
    grid: int = 2048,
    absolute: bool = True,
) -> EssentialValueReport:
    """Grid fraction of x with x ∈ B, T^n x ∈ B and φ_n(x) in the window.

    With ``absolute`` the window applies to |φ_n| (the Euclidean norm).
    """
    _check_dims(map_, alpha)
    lo, hi = window
    if lo > hi:
        raise ValueError("Window bounds are reversed")
    if grid < MIN_EVENT_GRID:
        raise ValueError(f"Event grids need at least {MIN_EVENT_GRID} points per axis")
    if not absolute and map_.dim != 1:
        raise ValueError("Signed windows need a scalar map")
    points = grid_points(grid_axes(alpha.rho, grid))
    total = len(points)
    in_base = in_boxes(points, boxes)
    kernels = phase_kernels(alpha)
    hits = []
    for n in sorted({int(n) for n in n_list}):
        shift = np.array([kern.points(np.array([n]))[0] for kern in kernels])
        moved = points + shift
        moved -= np.floor(moved)
        mask = in_base & in_boxes(moved, boxes)
        if mask.any():
            values = grid_sums(map_, alpha, n, grid).reshape(total, map_.dim)[mask]
            measured = np.linalg.norm(values, axis=1) if absolute else values[:, 0]
            count = int(np.count_nonzero((lo <= measured) & (measured <= hi)))
        else:
            count = 0
        hits.append((n, count / total))
        logger.debug(f"essential-value event n={n}: {count} grid points")
    return EssentialValueReport(
        window=(float(lo), float(hi)),
        absolute=absolute,
        grid=grid,
        base_measure=float(np.count_nonzero(in_base)) / total,
        hits=hits,
    )


# Compact extensions


def default_weyl_panel(
    h_max: int = 2, k_max: int = 3, rho: int = 2, dim: int = 1
) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """All (h, k) with |h|_∞ ≤ h_max, |k|_∞ ≤ k_max and (h, k) ≠ 0."""
    h_range = range(-h_max, h_max + 1)
    k_range = range(-k_max, k_max + 1)
    panel = []
    for h in itertools.product(h_range, repeat=rho):
        for k in itertools.product(k_range, repeat=dim):
            if any(h) or any(k):
                panel.append((tuple(h), tuple(k)))
    return panel


def _fiber_counts(
    map_: PiecewisePlanarMap, alpha: RotationVector, x0: Sequence[float], N: int
) -> np.ndarray:
    """Integer sums S_n = Σ_{j<n} φ(x_j) for n < N, shape (N, d)."""
    counts = np.zeros((N, map_.dim), dtype=np.int64)
    running = np.zeros(map_.dim, dtype=np.int64)
    start_point = np.asarray([x0], dtype=np.float64)
    for start, _, values in _orbit_blocks(map_, alpha, start_point, N):
        steps = np.rint(values[0]).astype(np.int64)
        cum = running + np.cumsum(steps, axis=0)
        stop = start + len(steps)
        counts[start:stop] = np.vstack([running[None, :], cum[:-1]])
        running = cum[-1]
    return counts


def weyl_probe(
    map_: PiecewisePlanarMap,
    alpha: RotationVector,
    a: Sequence[Any],
    frequencies: Sequence[tuple[Sequence[int], Sequence[int]]],
    N: int,
    x0: Sequence[float] | None = None,
    y0: Sequence[float] | None = None,
    seed: int = DEFAULT_SEED,
) -> WeylReport:
    """Weyl averages |(1/n) Σ_{m<n} e^{2πi(⟨h, x_m⟩ + ⟨k, y_m⟩)}| along a skew orbit.

    The fiber moves by y ↦ y + a·φ(x) with φ integer valued, so every phase
    is an exact fixed-point word. Each row reports the envelope
    max_{M/2 ≤ n ≤ M} |average_n| at M = N/4, N/2 and N.
    """
    _check_dims(map_, alpha)
    if not map_.integer_valued:
        raise ValueError(f"Map {map_.name} is not integer valued")
    if N < MIN_WEYL_LENGTH:
        raise ValueError(f"Weyl averages need N >= {MIN_WEYL_LENGTH}")
    if len(a) != map_.dim:
        raise ValueError(f"Translation vector needs {map_.dim} components")
    rng = np.random.default_rng(seed)
    x0 = tuple(x0) if x0 is not None else tuple(rng.random(alpha.rho))
    y0 = tuple(y0) if y0 is not None else tuple(rng.random(map_.dim))

    counts = _fiber_counts(map_, alpha, x0, N)
    steps = np.arange(N)
    checkpoints = (N // 4, N // 2, N)
    denominators = np.arange(1, N + 1, dtype=np.float64)
    rows = []
    with mp.workprec(alpha.precision_bits):
        shifts = [parse_value(ac, alpha.precision_bits) for ac in a]
        for h, k in frequencies:
            h, k = tuple(int(t) for t in h), tuple(int(t) for t in k)
            if len(h) != alpha.rho or len(k) != map_.dim:
                raise ValueError(f"Frequency {(h, k)} does not match T^{alpha.rho}×T^{map_.dim}")
            if not any(h) and not any(k):
                raise ValueError("The zero frequency is excluded")
            phase = form_kernel(alpha, h).phases(steps)
            for kc, shift, column in zip(k, shifts, counts.T, strict=True):
                if kc:
                    phase = phase + PhaseKernel(kc * to_mpf(shift)).phases(column)
            start = mp.fsum(t * to_mpf(v) for t, v in zip(h + k, x0 + y0, strict=True))
            phase = phase + fixed_offset(start)
            averages = np.abs(np.cumsum(np.exp(2j * np.pi * unit_floats(phase))) / denominators)
            envelope = tuple(float(np.max(averages[m // 2 - 1 : m])) for m in checkpoints)
            rows.append(
                WeylRow(
                    h=h,
                    k=k,
                    checkpoints=checkpoints,
                    envelope=envelope,
                    final_average=float(averages[-1]),
                )
            )
    return WeylReport(N=N, a=tuple(float(to_mpf(s)) for s in shifts), rows=rows)


def _torus_gap(u: np.ndarray) -> np.ndarray:
    f = u - np.floor(u)
    return np.minimum(f, 1.0 - f)


def _conjugation_residuals(
    alpha: RotationVector, a: Any, u: np.ndarray, y: np.ndarray, tol: float
) -> tuple[np.ndarray, np.ndarray]:
    """Residuals of S∘T̃_{α,Φ_a}∘S⁻¹ against T̃_{β,Ψ_a}, and the near-boundary mask."""
    with mp.workprec(alpha.precision_bits):
        a1, a2 = alpha.components
        b2 = float(a2 - a1 - mp.floor(a2 - a1))
        a1, a2 = float(a1), float(a2)
        shift = float(to_mpf(parse_value(a, alpha.precision_bits)))
    u1, u2 = u[:, 0], u[:, 1]
    x1 = u1
    x2 = u1 + u2
    x2 -= np.floor(x2)
    near = (
        (_torus_gap(x1 - x2) < tol)
        | (_torus_gap(x1) < tol)
        | (_torus_gap(x2) < tol)
        | (_torus_gap(u1 + u2) < tol)
        | (_torus_gap(u2) < tol)
    )
    # T̃ then S
    X1, X2 = x1 + a1, x2 + a2
    X1 -= np.floor(X1)
    X2 -= np.floor(X2)
    lhs = np.stack([X1, X2 - X1, y + shift * (x1 < x2)], axis=1)
    rhs = np.stack([u1 + a1, u2 + b2, y + shift * (u1 + u2 < 1.0)], axis=1)
    residual = np.max(_torus_gap(lhs - rhs), axis=1)
    return residual, near


def conjugation_check(
    alpha: RotationVector,
    a: Any,
    samples: int = 100_000,
    seed: int = DEFAULT_SEED,
    tol: float = 1e-9,
) -> ConjugationReport:
    """Largest residual of S∘T̃_{α,Φ_a}∘S⁻¹ = T̃_{β,Ψ_a} over random samples.

    S(x₁, x₂, y) = (x₁, x₂ − x₁, y), β = (α₁, α₂ − α₁) and Ψ_a = a·1_{Δ₁}
    with Δ₁ = {u₁ + u₂ < 1}. Samples within ``tol`` of either triangle
    boundary are skipped.
    """
    if alpha.rho != 2:
        raise ValueError("The conjugation acts on T²×T")
    rng = np.random.default_rng(seed)
    u = rng.random((samples, 2))
    y = rng.random(samples)
    residual, near = _conjugation_residuals(alpha, a, u, y, tol)
    kept = residual[~near]
    return ConjugationReport(
        samples=samples,
        skipped=int(np.count_nonzero(near)),
        max_residual=float(kept.max()) if kept.size else 0.0,
    )


def conjugation_residual(
    alpha: RotationVector, a: Any, point: Sequence[float], tol: float = 1e-9
) -> float:
    """Single-point residual of the conjugation identity.

    Raises:
        BoundaryHitError: If the point is within ``tol`` of a triangle boundary
    """
    u = np.asarray([point[:2]], dtype=np.float64)
    y = np.asarray([point[2]], dtype=np.float64)
    residual, near = _conjugation_residuals(alpha, a, u, y, tol)
    if near[0]:
        raise BoundaryHitError(f"Point {tuple(point)} is within {tol:g} of a triangle boundary")
    return float(residual[0])


# Induced cocycles


def induced_cocycle(
    map_: PiecewisePlanarMap,
    alpha: RotationVector,
    boxes: Sequence[Box],
    x0: Sequence[float],
    k_returns: int,
    cap: int = 10_000_000,
) -> InducedCocycle:
    """Return times R_m of x₀ to B and the induced sums φ_{R_m}(x₀).

    Each excursion is summed separately; the induced identity compares the
    running total of excursion sums with the direct sum at every return.

    Raises:
        ReturnTimeoutError: If fewer than ``k_returns`` returns occur by ``cap``
    """
    _check_dims(map_, alpha)
    if k_returns < 1:
        raise ValueError("Ask for at least one return")
    start_point = np.asarray([x0], dtype=np.float64)
    if not in_boxes(start_point, boxes)[0]:
        raise ValueError(f"Start point {tuple(x0)} is not in the base set")

    returns: list[int] = []
    direct: list[np.ndarray] = []
    excursions: list[np.ndarray] = []
    pending: list[np.ndarray] = []
    running = np.zeros(map_.dim)
    for start, grid, values in _orbit_blocks(map_, alpha, start_point, cap + 1):
        values = values[0]
        prefix = running + np.vstack([np.zeros(map_.dim), np.cumsum(values, axis=0)])
        landed = np.flatnonzero(in_boxes(grid[0], boxes)) + start
        cursor = 0
        for R in landed[landed >= 1][: k_returns - len(returns)]:
            offset = int(R - start)
            pending.append(_fsum_columns(values[cursor:offset]))
            excursions.append(_fsum_columns(np.array(pending)))
            pending = []
            cursor = offset
            returns.append(int(R))
            direct.append(prefix[offset])
        if len(returns) == k_returns:
            break
        pending.append(_fsum_columns(values[cursor:]))
        running = prefix[-1]
    if len(returns) < k_returns:
        raise ReturnTimeoutError(
            f"Only {len(returns)} of {k_returns} returns to B within {cap} steps"
        )
    induced = np.array(direct)
    totals = np.array(
        [_fsum_columns(np.array(excursions[: m + 1])) for m in range(len(excursions))]
    )
    identity_error = float(np.max(np.abs(totals - induced)))
    return InducedCocycle(
        return_times=tuple(returns),
        induced_sums=induced,
        identity_error=identity_error,
        mean_return=returns[-1] / k_returns,
        base_measure=boxes_measure(boxes),
    )
