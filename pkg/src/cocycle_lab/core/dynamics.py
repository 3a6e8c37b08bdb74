"""Rotations of T^1 and T^2 and ergodic sums of piecewise maps.

Orbit points {x + kα} come from the fixed-point phase kernels, never from
repeated addition. Sums over long orbits are reduced with ``math.fsum`` per
chunk and a compensated accumulator across chunks.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from typing import Any

import numpy as np
from mpmath import mp, mpf
from scipy import integrate

from ..utils.exceptions import (
    BoundaryHitError,
    ConfigurationError,
    InconsistentPiecesError,
    SamplingError,
)
from ..utils.logging import get_logger
from ..utils.precision import (
    DEFAULT_PRECISION_BITS,
    CompensatedSum,
    PhaseKernel,
    fixed_point,
    frac,
    to_mpf,
)
from .maps import PiecewisePlanarMap, ProductTerm
from .models import (
    DeviationReport,
    ErgodicSum,
    ErgodicSumSeries,
    Evaluation,
    LambdaFunctionals,
    MapClass,
    RelationReport,
    RotationVector,
    SandwichReport,
    ShadowAudit,
)
from .values import describe, parse_value, split_values

logger = get_logger(__name__)

ORBIT_CHUNK = 1 << 18
BATCH_BUDGET = 1 << 20
DEGENERATE_RATE = 1e-6
# Smallest sup-norm grid per axis, keyed by the torus dimension
SUP_GRID_MIN = {1: 10**5, 2: 10**3}


def make_rotation(
    values: str | Sequence[Any],
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> RotationVector:
    """Reduce one or two values mod 1 into a rotation vector.

    Args:
        values: Comma-separated text or a sequence of values
        precision_bits: Working precision of the components
    """
    items = split_values(values) if isinstance(values, str) else list(values)
    if len(items) not in (1, 2):
        raise ConfigurationError(f"Rotation needs 1 or 2 components, got {len(items)}")
    components = []
    labels = []
    with mp.workprec(precision_bits):
        for item in items:
            value = parse_value(item, precision_bits)
            components.append(frac(value))
            labels.append(item if isinstance(item, str) else str(describe(value)))
    return RotationVector(
        components=tuple(components), precision_bits=precision_bits, labels=tuple(labels)
    )


def irrationality_diagnostic(
    alpha: RotationVector,
    relation_bound: int = 10_000,
    certify_bits: int | None = None,
) -> RelationReport:
    """Search for k_0 + k·α ≈ 0 with max|k_i| ≤ relation_bound."""
    certify = certify_bits if certify_bits is not None else alpha.precision_bits // 2
    with mp.workprec(alpha.precision_bits):
        tol = mpf(2) ** -certify
        for index, component in enumerate(alpha.components):
            if abs(component) < tol:
                relation = [0] * (alpha.rho + 1)
                relation[index + 1] = 1
                return RelationReport(False, tuple(relation), relation_bound, certify)
        vector = [mpf(1), *alpha.components]
        relation = mp.pslq(vector, tol=tol, maxcoeff=relation_bound, maxsteps=10**5)
        if relation is not None:
            residual = abs(mp.fsum(k * v for k, v in zip(relation, vector, strict=True)))
            if residual >= tol or max(abs(k) for k in relation) > relation_bound:
                relation = None
    if relation is not None:
        logger.warning(f"Integer relation {relation} found for α")
    return RelationReport(
        totally_irrational=relation is None,
        relation=None if relation is None else tuple(int(k) for k in relation),
        relation_bound=relation_bound,
        certify_bits=certify,
    )


def rotate(alpha: RotationVector, x: Sequence[Any], n: int) -> tuple[Any, ...]:
    """({x_i + n·α_i}) at the precision of α."""
    if len(x) != alpha.rho:
        raise ValueError(f"Point has {len(x)} coordinates, rotation has {alpha.rho}")
    with mp.workprec(alpha.precision_bits):
        return tuple(
            frac(to_mpf(xi) + n * a) for xi, a in zip(x, alpha.components, strict=True)
        )


def phase_kernels(alpha: RotationVector) -> list[PhaseKernel]:
    with mp.workprec(alpha.precision_bits):
        return [PhaseKernel(c) for c in alpha.components]


def form_kernel(alpha: RotationVector, form: Sequence[int]) -> PhaseKernel:
    """Kernel of the rotation number ⟨form, α⟩."""
    with mp.workprec(alpha.precision_bits):
        theta = mp.fsum(m * a for m, a in zip(form, alpha.components, strict=True))
        return PhaseKernel(theta)


def orbit_points(
    alpha: RotationVector,
    x0: Sequence[float],
    k: np.ndarray,
    kernels: list[PhaseKernel] | None = None,
) -> np.ndarray:
    """Points {x0 + kα} as an (len(k), ρ) float array."""
    kernels = kernels or phase_kernels(alpha)
    return np.stack(
        [kern.points(k, offset) for kern, offset in zip(kernels, x0, strict=True)],
        axis=1,
    )


def _check_dims(map_: PiecewisePlanarMap, alpha: RotationVector) -> None:
    if map_.rho != alpha.rho:
        raise ValueError(
            f"Map {map_.name} lives on T^{map_.rho} but α has {alpha.rho} components"
        )


def evaluate(
    map_: PiecewisePlanarMap,
    x: Sequence[float],
    boundary_tol: float = 1e-12,
    strict: bool = False,
) -> Evaluation:
    """Evaluate a map at one point, flagging boundary hits.

    Raises:
        BoundaryHitError: If ``strict`` and x is within tolerance of a break
    """
    point = np.asarray([x], dtype=np.float64)
    distance = float(map_.boundary_distance(point)[0])
    hit = distance < boundary_tol
    if hit and strict:
        raise BoundaryHitError(
            f"Point {tuple(x)} is {distance:.3g} from a discontinuity of {map_.name}"
        )
    i, j = map_.locate(point)
    values = map_.evaluate_array(point)[0]
    cell = (int(i[0]),) if map_.rho == 1 else (int(i[0]), int(j[0]))
    return Evaluation(
        values=tuple(float(v) for v in values),
        cell=cell,
        boundary_hit=hit,
        boundary_distance=distance,
    )


def _warn_degenerate(hits: int, n: int, name: str) -> None:
    if n and hits > n * DEGENERATE_RATE:
        logger.warning(f"Degenerate orbit for {name}: {hits} boundary hits in {n} steps")


def ergodic_sum(
    map_: PiecewisePlanarMap,
    alpha: RotationVector,
    x0: Sequence[float],
    n: int,
    boundary_tol: float = 1e-12,
) -> ErgodicSum:
    """φ_n(x0) = Σ_{k<n} φ(x0 + kα)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    _check_dims(map_, alpha)
    kernels = phase_kernels(alpha)
    total = CompensatedSum((map_.dim,))
    hits = 0
    for start in range(0, n, ORBIT_CHUNK):
        k = np.arange(start, min(n, start + ORBIT_CHUNK))
        points = orbit_points(alpha, x0, k, kernels)
        values = map_.evaluate_array(points)
        hits += int(np.count_nonzero(map_.boundary_distance(points) < boundary_tol))
        total.add([math.fsum(values[:, c]) for c in range(map_.dim)])
    _warn_degenerate(hits, n, map_.name)
    return ErgodicSum(value=total.value.copy(), n=n, boundary_hits=hits)


def ergodic_series(
    map_: PiecewisePlanarMap,
    alpha: RotationVector,
    x0: Sequence[float],
    schedule: Sequence[int],
    sup_grid: int | None = None,
    boundary_tol: float = 1e-12,
) -> ErgodicSumSeries:
    """φ_n(x0) at every n of the schedule in one pass over the orbit."""
    _check_dims(map_, alpha)
    marks = sorted(set(int(n) for n in schedule))
    if marks and marks[0] < 0:
        raise ValueError("Schedule entries must be non-negative")
    kernels = phase_kernels(alpha)
    total = CompensatedSum((map_.dim,))
    values_at: dict[int, np.ndarray] = {}
    hits = 0
    pending = [m for m in marks if m > 0]
    for m in marks:
        if m == 0:
            values_at[0] = np.zeros(map_.dim)
    n_max = marks[-1] if marks else 0
    for start in range(0, n_max, ORBIT_CHUNK):
        stop = min(n_max, start + ORBIT_CHUNK)
        points = orbit_points(alpha, x0, np.arange(start, stop), kernels)
        values = map_.evaluate_array(points)
        hits += int(np.count_nonzero(map_.boundary_distance(points) < boundary_tol))
        while pending and pending[0] <= stop:
            upto = pending.pop(0) - start
            head = [math.fsum(values[:upto, c]) for c in range(map_.dim)]
            values_at[upto + start] = total.value + np.asarray(head)
        total.add([math.fsum(values[:, c]) for c in range(map_.dim)])
    _warn_degenerate(hits, n_max, map_.name)
    sup_stats = None
    if sup_grid is not None:
        sup_stats = tuple(sup_over_grid(map_, alpha, m, sup_grid) for m in marks)
    return ErgodicSumSeries(
        map_name=map_.name,
        x0=tuple(float(v) for v in x0),
        schedule=tuple(marks),
        values=np.array([values_at[m] for m in marks]).reshape(len(marks), map_.dim),
        boundary_hits=hits,
        sup_stats=sup_stats,
    )


def ergodic_sums_batch(
    map_: PiecewisePlanarMap,
    alpha: RotationVector,
    points: np.ndarray,
    n: int,
    boundary_tol: float = 1e-12,
) -> tuple[np.ndarray, int]:
    """φ_n at many base points; returns an (M, d) array and the hit count."""
    _check_dims(map_, alpha)
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    M = len(points)
    total = CompensatedSum((M, map_.dim))
    hits = 0
    if M == 0 or n == 0:
        return total.value, 0
    kernels = phase_kernels(alpha)
    block = max(1, BATCH_BUDGET // M)
    for start in range(0, n, block):
        k = np.arange(start, min(n, start + block))
        shifts = np.stack([kern.points(k) for kern in kernels], axis=1)
        grid = points[:, None, :] + shifts[None, :, :]
        flat = (grid - np.floor(grid)).reshape(-1, alpha.rho)
        values = map_.evaluate_array(flat).reshape(M, len(k), map_.dim)
        hits += int(np.count_nonzero(map_.boundary_distance(flat) < boundary_tol))
        total.add(values.sum(axis=1))
    return total.value.copy(), hits


def cocycle_identity_residual(
    map_: PiecewisePlanarMap,
    alpha: RotationVector,
    x: Sequence[float],
    m: int,
    n: int,
) -> float:
    """|φ_{m+n}(x) − φ_m(x) − φ_n(T^m x)| (max over components)."""
    shifted = [float(v) for v in rotate(alpha, x, m)]
    whole = ergodic_sum(map_, alpha, x, m + n).value
    head = ergodic_sum(map_, alpha, x, m).value
    tail = ergodic_sum(map_, alpha, shifted, n).value
    return float(np.max(np.abs(whole - head - tail)))


def shadow_audit(
    map_: PiecewisePlanarMap,
    alpha: RotationVector,
    x0: Sequence[float],
    n: int,
    shadow_bits: int | None = None,
) -> ShadowAudit:
    """Re-run an ergodic sum on orbit points exact to ``shadow_bits``."""
    _check_dims(map_, alpha)
    bits = shadow_bits or alpha.precision_bits
    fast = ergodic_sum(map_, alpha, x0, n)
    modulus = 1 << bits
    shift = bits - 53
    columns = []
    with mp.workprec(alpha.precision_bits):
        for a, x in zip(alpha.components, x0, strict=True):
            step = fixed_point(a, bits)
            start = fixed_point(to_mpf(x), bits)
            columns.append(
                [(((start + k * step) % modulus) >> shift) * 2.0**-53 for k in range(n)]
            )
    exact_points = np.array(columns, dtype=np.float64).T.reshape(n, alpha.rho)
    values = map_.evaluate_array(exact_points) if n else np.zeros((0, map_.dim))
    shadow = [math.fsum(values[:, c]) for c in range(map_.dim)]
    fast_points = (
        orbit_points(alpha, x0, np.arange(n)) if n else np.zeros((0, alpha.rho))
    )
    moved = int(np.count_nonzero(np.any(fast_points != exact_points, axis=1)))
    difference = float(np.max(np.abs(fast.value - np.asarray(shadow)))) if n else 0.0
    return ShadowAudit(
        n=n,
        fast=tuple(float(v) for v in fast.value),
        shadow=tuple(shadow),
        difference=difference,
        moved_points=moved,
        shadow_bits=bits,
    )


# Map validation


def _interior_samples(
    map_: PiecewisePlanarMap, count: int, margin: float, seed: int
) -> np.ndarray:
    rng = np.random.default_rng(seed)
    kept = np.zeros((0, map_.rho))
    while len(kept) < count:
        candidates = rng.random((4 * count, map_.rho))
        far = map_.boundary_distance(candidates) > margin
        kept = np.vstack([kept, candidates[far]])
    return kept[:count]


def check_derivatives(
    map_: PiecewisePlanarMap,
    samples: int = 200,
    step: float = 1e-6,
    tol: float = 1e-4,
    seed: int = 0,
) -> float:
    """Compare the declared gradient with central differences.

    Returns:
        Largest absolute discrepancy.

    Raises:
        InconsistentPiecesError: If the discrepancy exceeds ``tol``
    """
    if map_.gradient is None:
        raise ValueError(f"Map {map_.name} declares no derivatives")
    points = _interior_samples(map_, samples, 10 * step, seed)
    declared = map_.gradient_array(points)
    worst = 0.0
    for axis in range(map_.rho):
        offset = np.zeros(map_.rho)
        offset[axis] = step
        forward = map_.evaluate_array(points + offset)
        backward = map_.evaluate_array(points - offset)
        numeric = (forward - backward) / (2 * step)
        worst = max(worst, float(np.max(np.abs(numeric - declared[:, :, axis]))))
    if worst > tol:
        raise InconsistentPiecesError(
            f"Derivatives of {map_.name} disagree with finite differences by {worst:.3g}"
        )
    return worst


def _piece_at(map_: PiecewisePlanarMap, comp: int, i: int, j: int):
    def value(x1: float, x2: float) -> float:
        out = map_.piece(np.array([x1]), np.array([x2]), np.array([i]), np.array([j]))
        return float(np.asarray(out).reshape(1, map_.dim)[0, comp])

    return value


def _cell_integral(map_: PiecewisePlanarMap, comp: int) -> float:
    total = []
    if map_.class_tag is MapClass.TRIANGLE:
        tri = map_.region
        inside = _piece_at(map_, comp, 1, 0)
        outside = _piece_at(map_, comp, 0, 0)
        on_triangle, _ = integrate.dblquad(
            lambda y, x: inside(x, y) - outside(x, y),
            0.0,
            tri.a,
            lambda x: tri.b * x / tri.a,
            lambda x: tri.c + (tri.b - tri.c) * x / tri.a,
            epsabs=1e-12,
            epsrel=1e-12,
        )
        everywhere, _ = integrate.dblquad(
            lambda y, x: outside(x, y),
            0.0,
            1.0,
            0.0,
            1.0,
            epsabs=1e-12,
            epsrel=1e-12,
        )
        return on_triangle + everywhere
    b1, b2 = map_.breaks1, map_.breaks2
    for i in range(len(b1) - 1):
        if map_.rho == 1:
            value = _piece_at(map_, comp, i, 0)
            part, _ = integrate.quad(
                lambda x: value(x, 0.0), b1[i], b1[i + 1], epsabs=1e-13, epsrel=1e-13
            )
            total.append(part)
            continue
        for j in range(len(b2) - 1):
            value = _piece_at(map_, comp, i, j)
            part, _ = integrate.dblquad(
                lambda y, x: value(x, y),
                b1[i],
                b1[i + 1],
                b2[j],
                b2[j + 1],
                epsabs=1e-13,
                epsrel=1e-13,
            )
            total.append(part)
    return math.fsum(total)


def check_mean(map_: PiecewisePlanarMap, tol: float = 1e-8) -> tuple[float, ...]:
    """Integrate every component cell by cell and compare with the declared mean.

    Raises:
        InconsistentPiecesError: If any component is off by more than ``tol``
    """
    means = tuple(_cell_integral(map_, c) for c in range(map_.dim))
    for declared, measured in zip(map_.mean, means, strict=True):
        if abs(declared - measured) > tol:
            raise InconsistentPiecesError(
                f"Map {map_.name} declares mean {declared} but integrates to {measured}"
            )
    return means


def grid_mean(map_: PiecewisePlanarMap, grid: int = 1000) -> np.ndarray:
    """Midpoint-rule mean over a grid^ρ lattice."""
    axis = (np.arange(grid) + 0.5) / grid
    if map_.rho == 1:
        points = axis[:, None]
    else:
        X, Y = np.meshgrid(axis, axis, indexing="ij")
        points = np.stack([X.ravel(), Y.ravel()], axis=1)
    return map_.evaluate_array(points).mean(axis=0)


def log_schedule(n_max: int, per_decade: int = 10) -> list[int]:
    """Distinct integers 1 … n_max spaced evenly in log scale."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    count = max(2, int(math.ceil(per_decade * math.log10(n_max))) + 1)
    marks = np.unique(np.round(np.logspace(0, math.log10(n_max), count)).astype(np.int64))
    return [int(m) for m in marks]


# Grid sums


def grid_axes(rho: int, grid: int) -> list[np.ndarray]:
    """Sampling coordinates per axis; the second axis is offset to avoid the diagonal."""
    axes = [(np.arange(grid) + 0.5) / grid]
    if rho == 2:
        axes.append((np.arange(grid) + 0.381966) / grid)
    return axes


def grid_points(axes: list[np.ndarray]) -> np.ndarray:
    if len(axes) == 1:
        return axes[0][:, None]
    X, Y = np.meshgrid(axes[0], axes[1], indexing="ij")
    return np.stack([X.ravel(), Y.ravel()], axis=1)


def sawtooth_orbit_sums(
    alpha: RotationVector, form: Sequence[int], shift: float, u: np.ndarray, n: int
) -> np.ndarray:
    """Σ_{k<n} ψ(u + shift + k⟨form, α⟩) for every entry of u."""
    if n == 0:
        return np.zeros_like(u, dtype=np.float64)
    t = np.sort(form_kernel(alpha, form).points(np.arange(n), shift))
    total_t = math.fsum(t)
    reduced = u - np.floor(u)
    above = n - np.searchsorted(t, 1.0 - reduced, side="left")
    return n * reduced + total_t - above - n / 2


def product_orbit_sums(
    alpha: RotationVector,
    term: ProductTerm,
    X: np.ndarray,
    Y: np.ndarray,
    n: int,
) -> np.ndarray:
    """Σ_{k<n} {X + kα_1 + β_1}{Y + kα_2 + β_2} for all pairs, shape (len X, len Y)."""
    if n == 0:
        return np.zeros((len(X), len(Y)))
    k1, k2 = phase_kernels(alpha)
    A = k1.points(np.arange(n), term.shift1)
    B = k2.points(np.arange(n), term.shift2)
    thr_x, thr_y = 1.0 - X, 1.0 - Y
    order_x, order_y = np.argsort(thr_x), np.argsort(thr_y)
    sorted_x, sorted_y = thr_x[order_x], thr_y[order_y]
    rank_x = np.empty(len(X), dtype=np.int64)
    rank_x[order_x] = np.arange(len(X))
    rank_y = np.empty(len(Y), dtype=np.int64)
    rank_y[order_y] = np.arange(len(Y))

    # bin p counts thresholds ≤ value, so value ≥ threshold of rank r ⇔ p ≥ r + 1
    pA = np.searchsorted(sorted_x, A, side="right")
    pB = np.searchsorted(sorted_y, B, side="right")
    nx, ny = len(X) + 1, len(Y) + 1
    hist = np.bincount(pA * ny + pB, minlength=nx * ny).reshape(nx, ny)
    both = hist[::-1, ::-1].cumsum(axis=0).cumsum(axis=1)[::-1, ::-1]
    joint = both[np.ix_(rank_x + 1, rank_y + 1)].astype(np.float64)

    count_a = np.bincount(pA, minlength=nx)[::-1].cumsum()[::-1]
    count_b = np.bincount(pB, minlength=ny)[::-1].cumsum()[::-1]
    b_over_a = np.bincount(pA, weights=B, minlength=nx)[::-1].cumsum()[::-1]
    a_over_b = np.bincount(pB, weights=A, minlength=ny)[::-1].cumsum()[::-1]
    cA = count_a[rank_x + 1].astype(np.float64)
    cB = count_b[rank_y + 1].astype(np.float64)
    sA = b_over_a[rank_x + 1]
    tB = a_over_b[rank_y + 1]

    sum_a, sum_b = math.fsum(A), math.fsum(B)
    sum_ab = math.fsum(A * B)
    Xc, Yr = X[:, None], Y[None, :]
    return (
        n * Xc * Yr
        + Xc * sum_b
        - Xc * cB[None, :]
        + Yr * sum_a
        + sum_ab
        - tB[None, :]
        - Yr * cA[:, None]
        - sA[:, None]
        + joint
    )


def grid_sums(
    map_: PiecewisePlanarMap, alpha: RotationVector, n: int, grid: int
) -> np.ndarray:
    """φ_n on the sampling grid, shape (grid, d) or (grid, grid, d)."""
    _check_dims(map_, alpha)
    axes = grid_axes(alpha.rho, grid)
    shape = tuple(len(a) for a in axes)
    if map_.dim == 1 and map_.has_sawtooth_form:
        points = grid_points(axes)
        total = np.full(len(points), n * map_.sawtooth_constant)
        for term in map_.sawtooth:
            u = points @ np.asarray(term.form, dtype=np.float64)
            total += term.weight * sawtooth_orbit_sums(alpha, term.form, term.shift, u, n)
        return total.reshape(*shape, 1)
    if map_.dim == 1 and map_.has_product_form and alpha.rho == 2:
        total = np.full(shape, n * map_.product_constant)
        for term in map_.products:
            total += term.weight * product_orbit_sums(alpha, term, axes[0], axes[1], n)
        return total.reshape(*shape, 1)
    values, _ = ergodic_sums_batch(map_, alpha, grid_points(axes), n)
    return values.reshape(*shape, map_.dim)


def sup_over_grid(
    map_: PiecewisePlanarMap,
    alpha: RotationVector,
    n: int,
    grid: int,
    min_grid: int | None = None,
) -> float:
    """max |φ_n| over the sampling grid, a lower bound for ‖φ_n‖_∞.

    Args:
        map_: Map to sum
        alpha: Rotation
        n: Number of terms
        grid: Points per axis
        min_grid: Override for the smallest admissible grid, which is
            otherwise ``SUP_GRID_MIN[alpha.rho]``

    Raises:
        ValueError: If ``grid`` is below the smallest admissible grid
    """
    floor = SUP_GRID_MIN[alpha.rho] if min_grid is None else min_grid
    if grid < floor:
        raise ValueError(f"Sup-norm grid {grid} is below {floor} points per axis on T^{alpha.rho}")
    if n == 0:
        return 0.0
    return float(np.max(np.abs(grid_sums(map_, alpha, n, grid))))


# Triangle identity


def _near_triangle_lines(x: np.ndarray, y: np.ndarray, tol: float) -> np.ndarray:
    def near(u: np.ndarray) -> np.ndarray:
        f = u - np.floor(u)
        return np.minimum(f, 1.0 - f) < tol

    return near(x - y) | near(x) | near(y)


def _triangle_residuals(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    fx, fy = x - np.floor(x), y - np.floor(y)
    indicator = (fx < fy).astype(np.float64)
    d = x - y
    return np.abs(indicator - ((d - np.floor(d)) + fy - fx))


def triangle_identity_check(x: float, y: float, tol: float = 1e-12) -> float:
    """|1_{Δ0}(x, y) − ({x − y} + {y} − {x})| at one point.

    Raises:
        BoundaryHitError: If (x, y) is within ``tol`` of x = y, x = 0 or y = 0
    """
    xs, ys = np.array([x], float), np.array([y], float)
    if _near_triangle_lines(xs, ys, tol)[0]:
        raise BoundaryHitError(f"Point ({x}, {y}) lies on a line of the identity")
    return float(_triangle_residuals(xs, ys)[0])


def triangle_identity_sweep(
    samples: int, seed: int = 0, tol: float = 1e-12
) -> tuple[float, int]:
    """Max residual over random off-boundary points and the number skipped."""
    rng = np.random.default_rng(seed)
    worst, skipped = 0.0, 0
    for start in range(0, samples, ORBIT_CHUNK):
        size = min(ORBIT_CHUNK, samples - start)
        x, y = rng.random(size), rng.random(size)
        near = _near_triangle_lines(x, y, tol)
        skipped += int(np.count_nonzero(near))
        if np.any(~near):
            worst = max(worst, float(_triangle_residuals(x[~near], y[~near]).max()))
    return worst, skipped


# λ-functionals


def _trace(map_: PiecewisePlanarMap, comp: int, axis: int, i: int, j: int, at: float):
    """Function of the transverse coordinate: the piece of cell (i, j) at the edge."""

    def value(s: float) -> float:
        x1, x2 = (at, s) if axis == 0 else (s, at)
        return _piece_at(map_, comp, i, j)(x1, x2)

    return value


def _boundary_lambda(map_: PiecewisePlanarMap, comp: int, axis: int) -> float:
    b1, b2 = map_.breaks1, map_.breaks2
    parts = []
    for i in range(len(b1) - 1):
        for j in range(len(b2) - 1):
            if map_.rho == 1:
                value = _piece_at(map_, comp, i, 0)
                parts.append(value(b1[i + 1], 0.0) - value(b1[i], 0.0))
                continue
            if axis == 0:
                lo, hi, span = b1[i], b1[i + 1], (b2[j], b2[j + 1])
            else:
                lo, hi, span = b2[j], b2[j + 1], (b1[i], b1[i + 1])
            upper = _trace(map_, comp, axis, i, j, hi)
            lower = _trace(map_, comp, axis, i, j, lo)
            part, _ = integrate.quad(
                lambda s, u=upper, w=lower: u(s) - w(s),
                span[0],
                span[1],
                epsabs=1e-13,
                epsrel=1e-13,
            )
            parts.append(part)
    return math.fsum(parts)


def _quadrature_lambda(map_: PiecewisePlanarMap, comp: int, axis: int) -> float:
    b1, b2 = map_.breaks1, map_.breaks2
    parts = []

    for i in range(len(b1) - 1):
        for j in range(len(b2) - 1):

            def partial(x1: float, x2: float, i=i, j=j) -> float:
                out = map_.gradient(
                    np.array([x1]), np.array([x2]), np.array([i]), np.array([j])
                )
                return float(np.asarray(out).reshape(1, map_.dim, map_.rho)[0, comp, axis])

            if map_.rho == 1:
                part, _ = integrate.quad(
                    lambda x: partial(x, 0.0), b1[i], b1[i + 1], epsabs=1e-13
                )
            else:
                part, _ = integrate.dblquad(
                    lambda y, x: partial(x, y),
                    b1[i],
                    b1[i + 1],
                    b2[j],
                    b2[j + 1],
                    epsabs=1e-13,
                    epsrel=1e-13,
                )
            parts.append(part)
    return math.fsum(parts)


def lambda_functionals(
    map_: PiecewisePlanarMap, tolerance: float = 1e-6
) -> LambdaFunctionals:
    """λ_j(φ^i) = ∫ ∂φ^i/∂x_j by boundary traces and by quadrature.

    Raises:
        ValueError: If the map has no derivative evaluators
        InconsistentPiecesError: If the two methods disagree beyond ``tolerance``
    """
    if not map_.class_tag.has_gradient or map_.gradient is None:
        raise ValueError(
            f"λ-functionals need a class with derivatives, {map_.name} is "
            f"{map_.class_tag.value}"
        )
    boundary = [
        [_boundary_lambda(map_, c, axis) for axis in range(map_.rho)]
        for c in range(map_.dim)
    ]
    quadrature = [
        [_quadrature_lambda(map_, c, axis) for axis in range(map_.rho)]
        for c in range(map_.dim)
    ]
    disagreement = max(
        abs(b - q)
        for row_b, row_q in zip(boundary, quadrature, strict=True)
        for b, q in zip(row_b, row_q, strict=True)
    )
    if disagreement > tolerance:
        raise InconsistentPiecesError(
            f"Boundary traces and quadrature of {map_.name} differ by {disagreement:.3g}"
        )
    det = None
    if map_.dim == 2 and map_.rho == 2:
        det = boundary[0][0] * boundary[1][1] - boundary[0][1] * boundary[1][0]
    return LambdaFunctionals(
        boundary=boundary,
        quadrature=quadrature,
        max_disagreement=disagreement,
        det_M=det,
    )


def gamma_closed_forms(gamma1: float, gamma2: float) -> dict[str, float]:
    """Closed forms for {γ1 x1}{γ2 x2}, valid for 1 ≤ γ1, γ2 < 2."""
    for g in (gamma1, gamma2):
        if not 1.0 <= g < 2.0:
            raise ValueError("Closed forms hold for 1 ≤ γ < 2")

    def m(g: float) -> float:
        return g / 2 - 1 + 1 / g

    lambda1 = gamma1 * m(gamma2)
    lambda2 = gamma2 * m(gamma1)
    return {
        "mean": m(gamma1) * m(gamma2),
        "lambda1": lambda1,
        "lambda2": lambda2,
        "det_M": 0.5 * (gamma2 - gamma1) * (1 - (gamma1 + gamma2) / (gamma1 * gamma2)),
    }


# Derivative sandwich


def _cell_room(
    kernel: PhaseKernel, breaks: np.ndarray, coords: np.ndarray, n: int
) -> tuple[np.ndarray, np.ndarray]:
    """Distances from each coordinate to the nearest cut {β − kα}, k < n, on either side."""
    cuts = np.sort(
        np.concatenate([kernel.points(-np.arange(n), float(b)) for b in breaks[:-1]])
    )
    gaps = np.diff(np.concatenate([cuts, [cuts[0] + 1.0]]))
    slot = np.searchsorted(cuts, coords, side="right") - 1
    slot = np.where(slot < 0, len(cuts) - 1, slot)
    left = (coords - cuts[slot]) % 1.0
    right = (cuts[slot] + gaps[slot] - coords) % 1.0
    return left, right


def derivative_sandwich_check(
    map_: PiecewisePlanarMap,
    alpha: RotationVector,
    n: int,
    samples: int = 1000,
    seed: int = 0,
    lambda1: float | None = None,
) -> SandwichReport:
    """Test ½ n|λ1 u| ≤ |φ_n(x + u e1) − φ_n(x)| ≤ 2n|λ1 u| on same-cell pairs.

    Pairs are drawn so that no point x1 + kα1 (k < n) crosses a break of the
    map between x1 and x1 + u.

    Raises:
        SamplingError: If no admissible pair can be drawn
    """
    _check_dims(map_, alpha)
    if n < 1:
        raise ValueError("n must be at least 1")
    if lambda1 is None:
        lambda1 = lambda_functionals(map_).lambda1[0]
    if abs(lambda1) < 1e-12:
        raise ValueError(f"λ1({map_.name}) vanishes; the two-sided bound is void")

    rng = np.random.default_rng(seed)
    starts = rng.random((samples, map_.rho))
    _, room = _cell_room(phase_kernels(alpha)[0], map_.breaks1, starts[:, 0], n)
    usable = room > 1e-12
    if not np.any(usable):
        raise SamplingError(f"No same-cell pair found for {map_.name} at n={n}")
    starts, room = starts[usable], room[usable]
    u = room * rng.uniform(0.1, 0.9, len(room))
    moved = starts.copy()
    moved[:, 0] = (moved[:, 0] + u) % 1.0

    base, _ = ergodic_sums_batch(map_, alpha, starts, n)
    shifted, _ = ergodic_sums_batch(map_, alpha, moved, n)
    ratio = np.abs(shifted[:, 0] - base[:, 0]) / (n * abs(lambda1) * u)
    passed = (ratio >= 0.5) & (ratio <= 2.0)
    return SandwichReport(
        n=n,
        samples=int(len(ratio)),
        pass_fraction=float(np.mean(passed)),
        ratio_min=float(ratio.min()),
        ratio_max=float(ratio.max()),
        lambda1=float(lambda1),
    )


def sandwich_threshold(
    map_: PiecewisePlanarMap,
    alpha: RotationVector,
    schedule: Sequence[int],
    samples: int = 1000,
    seed: int = 0,
) -> tuple[int | None, list[SandwichReport]]:
    """Smallest n of the schedule at which every sampled pair passes."""
    lambda1 = lambda_functionals(map_).lambda1[0]
    reports = [
        derivative_sandwich_check(map_, alpha, n, samples, seed, lambda1)
        for n in sorted(set(schedule))
    ]
    threshold = next((r.n for r in reports if r.pass_fraction == 1.0), None)
    return threshold, reports


def linear_deviation_check(
    map_: PiecewisePlanarMap,
    alpha: RotationVector,
    n: int,
    samples: int = 1000,
    seed: int = 0,
    tolerance: float = 0.1,
    lambda_matrix: Sequence[Sequence[float]] | None = None,
) -> DeviationReport:
    """Compare φ_n(x + u) − φ_n(x) with n·Λu on same-cell pairs.

    Λ holds λ_j(φ^i). Each pair moves x in both coordinates and in either
    direction while every x + kα, k < n, stays inside one rectangle of the
    map. The error of a pair is max_i |φ^i_n(x + u) − φ^i_n(x) − n(Λu)_i|
    divided by n|u|, and it passes when that is at most ``tolerance``.

    Raises:
        ValueError: If the map has no derivatives
        SamplingError: If no admissible pair can be drawn
    """
    _check_dims(map_, alpha)
    if n < 1:
        raise ValueError("n must be at least 1")
    if lambda_matrix is None:
        lambda_matrix = lambda_functionals(map_).boundary
    lam = np.asarray(lambda_matrix, dtype=np.float64).reshape(map_.dim, map_.rho)

    rng = np.random.default_rng(seed)
    starts = rng.random((samples, map_.rho))
    u = np.zeros_like(starts)
    usable = np.ones(samples, dtype=bool)
    for axis, kernel in enumerate(phase_kernels(alpha)):
        breaks = map_.breaks1 if axis == 0 else map_.breaks2
        left, right = _cell_room(kernel, breaks, starts[:, axis], n)
        usable &= (left > 1e-12) & (right > 1e-12)
        u[:, axis] = rng.uniform(-0.9 * left, 0.9 * right)
    size = np.linalg.norm(u, axis=1)
    usable &= size > 0
    if not np.any(usable):
        raise SamplingError(f"No same-cell pair found for {map_.name} at n={n}")
    starts, u, size = starts[usable], u[usable], size[usable]

    base, _ = ergodic_sums_batch(map_, alpha, starts, n)
    shifted, _ = ergodic_sums_batch(map_, alpha, (starts + u) % 1.0, n)
    predicted = n * (u @ lam.T)
    error = np.max(np.abs(shifted - base - predicted), axis=1) / (n * size)
    return DeviationReport(
        n=n,
        samples=int(len(error)),
        tolerance=tolerance,
        pass_fraction=float(np.mean(error <= tolerance)),
        max_error=float(error.max()),
        mean_error=float(error.mean()),
        lambda_matrix=lam.tolist(),
    )


__all__ = [
    "make_rotation",
    "irrationality_diagnostic",
    "rotate",
    "orbit_points",
    "evaluate",
    "ergodic_sum",
    "ergodic_series",
    "ergodic_sums_batch",
    "cocycle_identity_residual",
    "shadow_audit",
    "check_derivatives",
    "check_mean",
    "grid_mean",
    "grid_sums",
    "sup_over_grid",
    "triangle_identity_check",
    "triangle_identity_sweep",
    "lambda_functionals",
    "gamma_closed_forms",
    "derivative_sandwich_check",
    "sandwich_threshold",
    "linear_deviation_check",
]
