"""Torus partitions cut by translates of the boundary of Δ₀.

The vertical lines x = {−kα₁} and horizontal lines y = {−kα₂}, k < ℓ, cut the
unit square into the ℓ² rectangles of R_ℓ. Each rectangle is then cut by the
slope-one lines y − x ≡ k(α₁ − α₂) crossing it, and the strips between
consecutive crossings are the cells of P_ℓ. Lines sharing an index k meet in
one point, the translated vertex of Δ₀; every other triple incidence is
refused as a degeneracy.
"""

from __future__ import annotations

import math
import statistics
import time
from collections import defaultdict
from collections.abc import Sequence
from dataclasses import replace
from typing import Any

import numpy as np
from mpmath import mp
from shapely.geometry import Point, Polygon
from shapely.ops import polylabel

from ..utils.exceptions import CodingAmbiguityError, DegeneracyError
from ..utils.logging import get_logger, log_duration
from ..utils.precision import (
    DEFAULT_PRECISION_BITS,
    PhaseKernel,
    fixed_offset,
    torus_norms,
)
from .diophantine import bad_margin, convergents, expand_cf
from .dynamics import log_schedule, phase_kernels
from .maps import PiecewisePlanarMap
from .models import (
    DiscontinuityMargin,
    DiscontinuityReport,
    EqfunctReport,
    EqfunctRow,
    GapStats,
    MapClass,
    PartitionCell,
    RotationVector,
    SchmidtRecord,
    TorusPartition,
)
from .values import parse_value

logger = get_logger(__name__)

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0
EDGE_CLEARANCE = 1e-8
_KEY_DIGITS = 12
_CODING_CHUNK = 2048
_GAP_FLOOR = np.uint64(1 << 14)  # 2**-50 in 64-bit phase units

Line = tuple[str, int]
Vertex = tuple[float, float, tuple[Line, Line]]


def _pair(a: Line, b: Line) -> tuple[Line, Line]:
    return (a, b) if a <= b else (b, a)


def line_offsets(alpha: RotationVector, ell: int) -> tuple[np.ndarray, ...]:
    """Offsets v_k = {−kα₁}, h_k = {−kα₂} and c_k = {h_k − v_k}, k < ℓ.

    c_k is formed from the rounded v_k and h_k so that the lines with equal
    index meet exactly in floating point.
    """
    if alpha.rho != 2:
        raise ValueError("Torus partitions need a two-dimensional rotation")
    if ell < 1:
        raise ValueError("ell must be at least 1")
    k1, k2 = phase_kernels(alpha)
    steps = -np.arange(ell)
    v = k1.points(steps)
    h = k2.points(steps)
    c = h - v
    c[c < 0] += 1.0
    return v, h, c


def _check_spacing(family: str, offsets: np.ndarray, tol: float) -> None:
    order = np.argsort(offsets, kind="stable")
    ordered = offsets[order]
    gaps = np.diff(np.append(ordered, ordered[0] + 1.0))
    close = np.flatnonzero(gaps <= tol)
    if close.size:
        m = int(close[0])
        a, b = int(order[m]), int(order[(m + 1) % len(order)])
        raise DegeneracyError(
            f"Lines {family}{a} and {family}{b} are closer than {tol:g}",
            [(family, a), (family, b)],
        )


def _check_corners(v: np.ndarray, h: np.ndarray, c: np.ndarray, tol: float) -> None:
    """Refuse diagonals passing near a grid corner other than their own vertex."""
    ell = len(v)
    order = np.argsort(c, kind="stable")
    ordered = c[order]
    u = h[None, :] - v[:, None]
    u = u - np.floor(u)
    pos = np.searchsorted(ordered, u)
    I, J = np.meshgrid(np.arange(ell), np.arange(ell), indexing="ij")
    for candidate in (pos % ell, (pos - 1) % ell):
        d = np.abs(u - ordered[candidate])
        d = np.minimum(d, 1.0 - d)
        k = order[candidate]
        bad = (d <= tol) & ~((I == J) & (J == k))
        if bad.any():
            i, j = (int(t) for t in np.argwhere(bad)[0])
            raise DegeneracyError(
                f"Diagonal D{int(k[i, j])} passes within {tol:g} of the corner V{i}∩H{j}",
                [("V", i), ("H", j), ("D", int(k[i, j]))],
            )


def _crossing(p: Vertex, line: Line, c: float, k: int) -> Vertex:
    family, _ = line
    if family == "V":
        x = p[0]
        return (x, x + c, _pair(line, ("D", k)))
    if family == "H":
        y = p[1]
        return (y - c, y, _pair(line, ("D", k)))
    raise DegeneracyError(f"Parallel diagonals D{line[1]} and D{k} intersect", [line, ("D", k)])


def _half(
    polygon: tuple[list[Vertex], list[Line]],
    c: float,
    k: int,
    above: bool,
    tol: float,
) -> tuple[list[Vertex], list[Line]]:
    """Part of a convex polygon with y − x ≥ c (``above``) or ≤ c."""
    verts, lines = polygon
    sign = 1.0 if above else -1.0
    f = []
    for x, y, _ in verts:
        value = sign * (y - x - c)
        f.append(0.0 if abs(value) <= tol else value)
    cut: Line = ("D", k)
    out_v: list[Vertex] = []
    out_l: list[Line] = []
    n = len(verts)
    for m in range(n):
        p, line = verts[m], lines[m]
        fp, fq = f[m], f[(m + 1) % n]
        if fp >= 0:
            out_v.append(p)
            if fq >= 0:
                out_l.append(line)
            elif fp > 0:
                out_l.append(line)
                out_v.append(_crossing(p, line, c, k))
                out_l.append(cut)
            else:
                out_l.append(cut)
        elif fq > 0:
            out_v.append(_crossing(p, line, c, k))
            out_l.append(line)
    return out_v, out_l


def _area_centroid(xy: np.ndarray) -> tuple[float, np.ndarray]:
    x, y = xy[:, 0], xy[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * math.fsum(cross)
    cx = math.fsum((x + xn) * cross) / (6.0 * area)
    cy = math.fsum((y + yn) * cross) / (6.0 * area)
    return area, np.array([cx, cy])


def _edge_clearance(xy: np.ndarray, point: np.ndarray) -> float:
    start = xy
    direction = np.roll(xy, -1, axis=0) - xy
    rel = point - start
    cross = direction[:, 0] * rel[:, 1] - direction[:, 1] * rel[:, 0]
    return float(np.min(cross / np.linalg.norm(direction, axis=1)))


def representative_point(vertices: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Centroid, or the pole of inaccessibility when the centroid hugs an edge."""
    xy = np.asarray(vertices, dtype=np.float64)
    _, centroid = _area_centroid(xy)
    if _edge_clearance(xy, centroid) >= EDGE_CLEARANCE:
        return float(centroid[0]), float(centroid[1])
    pole = polylabel(Polygon(xy), tolerance=1e-12)
    return float(pole.x), float(pole.y)


def _edge_key(line: Line, p: Vertex, q: Vertex) -> tuple[Line, float]:
    coordinate = 1 if line[0] == "V" else 0
    mid = 0.5 * (p[coordinate] + q[coordinate])
    return line, round(mid, _KEY_DIGITS)


def _make_cell(
    cell_id: int, rect: tuple[int, int], polygon: tuple[list[Vertex], list[Line]]
) -> PartitionCell:
    verts, lines = polygon
    xy = np.array([(x, y) for x, y, _ in verts])
    area, _ = _area_centroid(xy)
    n = len(verts)
    return PartitionCell(
        id=cell_id,
        rect=rect,
        vertices=tuple((float(x), float(y)) for x, y, _ in verts),
        edge_lines=tuple(lines),
        area=float(area),
        point=representative_point(xy),
        vertex_keys=tuple(key for _, _, key in verts),
        edge_keys=tuple(_edge_key(lines[m], verts[m], verts[(m + 1) % n]) for m in range(n)),
    )


def _sample_points(cell: PartitionCell) -> np.ndarray:
    p = np.asarray(cell.point)
    first = np.asarray(cell.vertices[0])
    opposite = np.asarray(cell.vertices[len(cell.vertices) // 2])
    return np.stack([p, (2.0 * p + first) / 3.0, (2.0 * p + opposite) / 3.0])


def _codings(cells: Sequence[PartitionCell], alpha: RotationVector, ell: int) -> list[str]:
    k1, k2 = phase_kernels(alpha)
    steps = np.arange(ell)
    s1, s2 = k1.points(steps), k2.points(steps)
    words: list[str] = []
    for start in range(0, len(cells), _CODING_CHUNK):
        block = np.array([_sample_points(c) for c in cells[start : start + _CODING_CHUNK]])
        u = block[..., 0, None] + s1
        w = block[..., 1, None] + s2
        inside = (u - np.floor(u)) < (w - np.floor(w))
        agree = np.all(inside == inside[:, :1, :], axis=(1, 2))
        if not agree.all():
            ids = [cells[start + int(m)].id for m in np.flatnonzero(~agree)]
            raise CodingAmbiguityError(f"Interior samples disagree in cells {ids[:10]}", ids)
        for row in inside[:, 0, :]:
            words.append("".join(np.where(row, "1", "0")))
    return words


def cell_coding(partition: TorusPartition, cell_id: int) -> str:
    """(1_{Δ₀}(T^i x))_{i<ℓ} for a cell, verified at three interior points.

    Raises:
        CodingAmbiguityError: If the samples disagree
    """
    cell = partition.cells[cell_id]
    if cell.area <= 0:
        raise ValueError(f"Cell {cell_id} has no interior")
    return _codings([cell], partition.alpha, partition.ell)[0]


def build_partition(
    alpha: RotationVector,
    ell: int,
    include_diagonals: bool = True,
    incidence_tol: float = 1e-9,
) -> TorusPartition:
    """Build P_ℓ (with diagonals) or R_ℓ (without).

    Raises:
        DegeneracyError: If three lines meet within ``incidence_tol`` away
            from a translated vertex of Δ₀, or the cell count is off
    """
    started = time.perf_counter()
    v, h, c = line_offsets(alpha, ell)
    _check_spacing("V", v, incidence_tol)
    _check_spacing("H", h, incidence_tol)
    if include_diagonals:
        _check_spacing("D", c, incidence_tol)
        _check_corners(v, h, c, incidence_tol)

    v_order = np.argsort(v, kind="stable")
    h_order = np.argsort(h, kind="stable")
    columns = np.append(v[v_order], 1.0)
    rows = np.append(h[h_order], 1.0)
    d_order = np.argsort(c, kind="stable")
    lifts = np.concatenate([c[d_order] - 1.0, c[d_order]])
    lift_index = np.concatenate([d_order, d_order])
    if not include_diagonals:
        lifts, lift_index = lifts[:0], lift_index[:0]

    cells: list[PartitionCell] = []
    rect_first = np.zeros((ell, ell), dtype=np.int64)
    rect_cuts: list[np.ndarray] = []
    for i in range(ell):
        x0, x1 = float(columns[i]), float(columns[i + 1])
        vl: Line = ("V", int(v_order[i]))
        vr: Line = ("V", int(v_order[(i + 1) % ell]))
        for j in range(ell):
            y0, y1 = float(rows[j]), float(rows[j + 1])
            hb: Line = ("H", int(h_order[j]))
            ht: Line = ("H", int(h_order[(j + 1) % ell]))
            remainder = (
                [
                    (x0, y0, _pair(vl, hb)),
                    (x1, y0, _pair(vr, hb)),
                    (x1, y1, _pair(vr, ht)),
                    (x0, y1, _pair(vl, ht)),
                ],
                [hb, vr, ht, vl],
            )
            lo = np.searchsorted(lifts, y0 - x1 + incidence_tol, side="right")
            hi = np.searchsorted(lifts, y1 - x0 - incidence_tol, side="left")
            rect_first[i, j] = len(cells)
            rect_cuts.append(lifts[lo:hi].copy())
            for m in range(lo, hi):
                cut, k = float(lifts[m]), int(lift_index[m])
                below = _half(remainder, cut, k, above=False, tol=incidence_tol)
                cells.append(_make_cell(len(cells), (i, j), below))
                remainder = _half(remainder, cut, k, above=True, tol=incidence_tol)
            cells.append(_make_cell(len(cells), (i, j), remainder))

    expected = 3 * ell * ell - ell if include_diagonals else ell * ell
    if len(cells) != expected:
        raise DegeneracyError(
            f"Partition has {len(cells)} cells, expected {expected}: spurious incidences"
        )
    if include_diagonals:
        words = _codings(cells, alpha, ell)
        cells = [replace(cell, coding=word) for cell, word in zip(cells, words, strict=True)]

    partition = TorusPartition(
        ell=ell,
        alpha=alpha,
        include_diagonals=include_diagonals,
        v_lines=tuple(float(t) for t in np.sort(v)),
        h_lines=tuple(float(t) for t in np.sort(h)),
        d_lines=tuple(float(t) for t in np.sort((1.0 - c) % 1.0)) if include_diagonals else (),
        cells=cells,
        adjacency=_adjacency(cells),
        columns=columns,
        rows=rows,
        rect_first=rect_first,
        rect_cuts=tuple(rect_cuts),
    )
    log_duration(f"build_partition(ell={ell}, cells={len(cells)})", time.perf_counter() - started)
    return partition


def _adjacency(cells: Sequence[PartitionCell]) -> list[tuple[int, int, str, int]]:
    sides: dict[Any, list[int]] = defaultdict(list)
    for cell in cells:
        for key in cell.edge_keys:
            sides[key].append(cell.id)
    adjacency = []
    for key, owners in sides.items():
        if len(owners) != 2:
            raise DegeneracyError(f"Edge {key} bounds {len(owners)} cells", owners)
        (family, k), _ = key
        a, b = sorted(owners)
        adjacency.append((a, b, family, k))
    return sorted(adjacency)


def euler_characteristic(partition: TorusPartition) -> tuple[int, int, int]:
    """(V, E, F) of the cell complex on the torus."""
    vertices = {key for cell in partition.cells for key in cell.vertex_keys}
    edges = {key for cell in partition.cells for key in cell.edge_keys}
    return len(vertices), len(edges), len(partition.cells)


def geometry_report(partition: TorusPartition) -> dict[str, Any]:
    """Area sum, convexity, edge counts and distance of edges to their lines."""
    v, h, c = line_offsets(partition.alpha, partition.ell)
    residual = 0.0
    convex = True
    for cell in partition.cells:
        xy = np.asarray(cell.vertices)
        edges = np.roll(xy, -1, axis=0) - xy
        turns = edges[:, 0] * np.roll(edges, -1, axis=0)[:, 1] - edges[:, 1] * np.roll(
            edges, -1, axis=0
        )[:, 0]
        convex &= bool(np.all(turns > 0))
        for (family, k), (x, y) in zip(cell.edge_lines, cell.vertices, strict=True):
            if family == "V":
                u = x - v[k]
            elif family == "H":
                u = y - h[k]
            else:
                u = y - x - c[k]
            residual = max(residual, abs(u - round(u)))
    return {
        "area_sum": math.fsum(cell.area for cell in partition.cells),
        "max_edges": max(len(cell.vertices) for cell in partition.cells),
        "convex": convex,
        "line_residual": residual,
        "euler": _euler_value(partition),
    }


def _euler_value(partition: TorusPartition) -> int:
    V, E, F = euler_characteristic(partition)
    return V - E + F


def closure_neighbors(partition: TorusPartition) -> list[tuple[int, ...]]:
    """Cells sharing at least one vertex with each cell."""
    touching: dict[Any, set[int]] = defaultdict(set)
    for cell in partition.cells:
        for key in cell.vertex_keys:
            touching[key].add(cell.id)
    result = []
    for cell in partition.cells:
        around = set().union(*(touching[key] for key in cell.vertex_keys))
        around.discard(cell.id)
        result.append(tuple(sorted(around)))
    return result


def edge_neighbors(partition: TorusPartition) -> list[tuple[int, ...]]:
    """Cells sharing an edge with each cell."""
    around: list[set[int]] = [set() for _ in partition.cells]
    for a, b, _, _ in partition.adjacency:
        if a != b:
            around[a].add(b)
            around[b].add(a)
    return [tuple(sorted(s)) for s in around]


def check_refinement(coarse: TorusPartition, fine: TorusPartition) -> list[int]:
    """Parent in ``coarse`` of every cell of ``fine``.

    Raises:
        ValueError: If the partitions are not comparable
        DegeneracyError: If a fine cell is not inside its located parent, or
            its coding does not extend the parent's
    """
    if coarse.ell > fine.ell or coarse.include_diagonals != fine.include_diagonals:
        raise ValueError("Refinement needs a coarser partition of the same kind")
    if not np.array_equal(coarse.alpha.floats(), fine.alpha.floats()):
        raise ValueError("Partitions belong to different rotations")
    parents = coarse.locate([cell.point for cell in fine.cells])
    shapes = [Polygon(cell.vertices).buffer(1e-9) for cell in coarse.cells]
    outside = [
        cell.id
        for cell, parent in zip(fine.cells, parents, strict=True)
        if not shapes[parent].contains(Polygon(cell.vertices))
        or not shapes[parent].contains(Point(cell.point))
    ]
    if outside:
        raise DegeneracyError(f"Cells {outside[:10]} leave their parent cell", outside)
    if coarse.include_diagonals:
        broken = [
            cell.id
            for cell, parent in zip(fine.cells, parents, strict=True)
            if cell.coding[: coarse.ell] != coarse.cells[parent].coding
        ]
        if broken:
            raise CodingAmbiguityError(f"Codings of {broken[:10]} do not refine", broken)
    return [int(p) for p in parents]


# Coding hypotheses


def eqfunct_schedule(alpha: RotationVector, count: int = 6) -> list[int]:
    """The first ``count`` distinct convergent denominators of α₂."""
    if count < 1:
        raise ValueError("Schedule needs at least one entry")
    depth = count + 2
    while True:
        cf = expand_cf(alpha.components[1], depth, alpha.precision_bits)
        table = convergents(cf, min(depth, cf.depth + 1))
        distinct = sorted(set(table.q))
        if len(distinct) >= count or cf.precision_exhausted:
            return distinct[:count]
        depth += count


def check_eqfunct_hypotheses(
    partitions: Sequence[TorusPartition],
    edge_factor: float = 0.1,
    neighbor_bound: int = 36,
) -> EqfunctReport:
    """Check the coding hypotheses along a sequence of P_ℓ partitions.

    For each partition: maximal diameter, maximal closure-neighbor count, the
    family C of cells with a vertical edge ≥ edge_factor/ℓ, the normalized
    minimal area over C, the share of C and, for every cell of C, a neighbor
    across a vertical edge whose coding differs in exactly one letter.
    """
    if not partitions:
        raise ValueError("No partitions to check")
    rows: list[EqfunctRow] = []
    for partition in partitions:
        if not partition.include_diagonals:
            raise ValueError("Coding hypotheses concern P_ℓ, not R_ℓ")
        ell = partition.ell
        cells = partition.cells
        neighbors = closure_neighbors(partition)
        threshold = edge_factor / ell
        family = [
            cell
            for cell in cells
            if any(length >= threshold for length, _ in cell.vertical_edges)
        ]
        owners: dict[Any, list[int]] = defaultdict(list)
        for cell in cells:
            for key in cell.edge_keys:
                owners[key].append(cell.id)
        witnesses = []
        for cell in family:
            found = False
            for key, (kind, _) in zip(cell.edge_keys, cell.edge_lines, strict=True):
                if kind != "V":
                    continue
                for other in owners[key]:
                    if other != cell.id and _letters_apart(cell.coding, cells[other].coding) == 1:
                        found = True
            if not found:
                witnesses.append(cell.id)
        min_area = min((cell.area for cell in family), default=0.0)
        rows.append(
            EqfunctRow(
                ell=ell,
                cells=len(cells),
                max_diameter=max(cell.diameter for cell in cells),
                max_neighbors=max(len(n) for n in neighbors),
                c2_hat=ell * ell * min_area,
                min_area_times_card=min_area * len(cells),
                family_size=len(family),
                family_fraction=len(family) / len(cells),
                one_letter_ok=not witnesses,
                witnesses=witnesses,
            )
        )
        logger.debug(f"eqfunct ell={ell}: |C|={len(family)} of {len(cells)}")

    c2 = [row.c2_hat for row in rows]
    fitted = statistics.median(c2)
    stability = max(c2) / min(c2) if min(c2) > 0 else math.inf
    diameters = [row.max_diameter for row in rows]
    checks = {
        "diameter_decreasing": all(b < a for a, b in zip(diameters, diameters[1:])),
        "neighbor_bound": all(row.max_neighbors <= neighbor_bound for row in rows),
        "area_lower_bound": all(row.min_area_times_card >= fitted / 3 for row in rows)
        and fitted > 0,
        "family_fraction": all(row.family_fraction >= 1 / 6 for row in rows),
        "one_letter_neighbor": all(row.one_letter_ok for row in rows),
    }
    for name, ok in checks.items():
        if not ok:
            logger.warning(f"Coding hypothesis {name} fails")
    return EqfunctReport(rows=rows, checks=checks, fitted_c2=fitted, c2_stability=stability)


def _letters_apart(a: str, b: str) -> int:
    return sum(x != y for x, y in zip(a, b, strict=True))


# Gaps and simultaneous approximation


def gap_stats(
    alpha1: Any,
    betas: Sequence[Any],
    n: int,
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> GapStats:
    """Gaps between the points {β_j − kα₁}, k < n, on the circle.

    Raises:
        DegeneracyError: If two points lie within 2**-50 of each other
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not betas:
        raise ValueError("Need at least one shift β")
    with mp.workprec(precision_bits):
        kernel = PhaseKernel(parse_value(alpha1, precision_bits))
        offsets = [fixed_offset(parse_value(b, precision_bits)) for b in betas]
    base = kernel.phases(-np.arange(n))
    phases = np.sort(np.concatenate([base + offset for offset in offsets]))
    if len(phases) == 1:
        gaps = np.array([1.0])
    else:
        words = np.diff(np.concatenate([phases, phases[:1]]))
        if np.any(words < _GAP_FLOOR):
            at = int(np.argmin(words))
            raise DegeneracyError(f"Orbit points {at} and {at + 1} coincide", [at, at + 1])
        gaps = words.astype(np.float64) / 2.0**64
    ordered = np.sort(gaps)
    distinct = 1 + int(np.count_nonzero(np.diff(ordered) > 1e-12))
    return GapStats(
        n=n,
        points=len(phases),
        min_gap=float(ordered[0]),
        max_gap=float(ordered[-1]),
        c_hat=n * float(ordered[0]),
        c_prime_hat=n * float(ordered[-1]),
        distinct_gaps=distinct,
    )


def break_points(breaks: np.ndarray) -> list[float]:
    """Distinct breaks β_1 … β_r of one axis, with β_r = 1 read as 0."""
    return sorted({float(b) % 1.0 for b in breaks[1:]})


def check_discontinuity_hypothesis(
    map_: PiecewisePlanarMap,
    alpha: RotationVector,
    q_max: int = 10_000,
    floor: float = 1e-3,
    gap_schedule: Sequence[int] | None = None,
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> DiscontinuityReport:
    """Check β_j − β_j' ∈ Bad_Z(α_i) for the breaks of a piecewise map.

    Maps of class F2 are checked on both axes, every other map on the first
    axis only. Each difference gets the margin min |q|·‖qα_i − (β_j − β_j')‖
    over 1 ≤ |q| ≤ q_max; j = j' gives the homogeneous margin of α_i. The
    points {β_j − kα₁}, k < n, then have gaps between c/n and c'/n, and the
    report carries the extreme n·gap values over the schedule as c and c'.

    Raises:
        ValueError: If the map and the rotation live on different tori
        DegeneracyError: If two break orbits meet
    """
    if map_.rho != alpha.rho:
        raise ValueError(f"Map {map_.name} lives on T^{map_.rho}, α on T^{alpha.rho}")
    both = map_.class_tag is MapClass.F2 and alpha.rho == 2
    axes = (0, 1) if both else (0,)
    margins = []
    for axis in axes:
        betas = break_points(map_.breaks1 if axis == 0 else map_.breaks2)
        for difference in sorted({(a - b) % 1.0 for a in betas for b in betas}):
            margin = bad_margin(
                alpha.components[axis], difference, q_max, precision_bits=precision_bits
            )
            margins.append(
                DiscontinuityMargin(axis, difference, margin.margin, margin.argmin_q)
            )

    schedule = gap_schedule if gap_schedule is not None else log_schedule(q_max, 2)
    betas = break_points(map_.breaks1)
    gaps = [gap_stats(alpha.components[0], betas, n, precision_bits) for n in schedule]
    report = DiscontinuityReport(
        map_name=map_.name,
        hypothesis="H2" if both else "H1",
        q_max=q_max,
        floor=floor,
        margins=margins,
        gaps=gaps,
        c_low=min(g.c_hat for g in gaps),
        c_high=max(g.c_prime_hat for g in gaps),
    )
    logger.info(
        f"{report.hypothesis} for {map_.name}: min margin {report.min_margin:.4g}, "
        f"c in [{report.c_low:.4g}, {report.c_high:.4g}]"
    )
    return report


def schmidt_exponent_probe(
    alpha: RotationVector, n_max: int, per_decade: int = 10
) -> list[SchmidtRecord]:
    """Best ‖n₁α₁ − n₂α₂‖ over 1 ≤ n₁, n₂ ≤ n on a log schedule of n.

    The exponent is −log‖·‖ / log n; records reaching the golden ratio are
    highlighted.
    """
    if alpha.rho != 2:
        raise ValueError("The exponent probe needs a two-dimensional rotation")
    if n_max > 10**5:
        raise ValueError("n_max is limited to 10**5")
    k1, k2 = phase_kernels(alpha)
    records = []
    for n in log_schedule(n_max, per_decade):
        steps = np.arange(1, n + 1)
        a = k1.phases(steps)
        b = k2.phases(steps)
        order = np.argsort(b)
        sorted_b = b[order]
        pos = np.searchsorted(sorted_b, a)
        best = (math.inf, 0, 0)
        for candidate in (pos % n, (pos - 1) % n):
            d = torus_norms(a - sorted_b[candidate])
            m = int(np.argmin(d))
            if d[m] < best[0]:
                best = (float(d[m]), m + 1, int(order[candidate[m]]) + 1)
        distance, n1, n2 = best
        exponent = None if n == 1 or distance == 0 else -math.log(distance) / math.log(n)
        records.append(
            SchmidtRecord(
                n=n,
                n1=n1,
                n2=n2,
                distance=distance,
                exponent=exponent,
                highlighted=exponent is not None and exponent >= GOLDEN,
            )
        )
    return records


# Export


def export_partition_json(partition: TorusPartition) -> dict[str, Any]:
    """Cells with vertex lists, codings and adjacency as a JSON document."""
    V, E, F = euler_characteristic(partition)
    return {
        "ell": partition.ell,
        "alpha": partition.alpha.to_dict(),
        "include_diagonals": partition.include_diagonals,
        "cells_expected": partition.expected_card,
        "lines": {
            "vertical": list(partition.v_lines),
            "horizontal": list(partition.h_lines),
            "diagonal": list(partition.d_lines),
        },
        "euler": {"V": V, "E": E, "F": F},
        "cells": [
            {
                "id": cell.id,
                "vertices": [list(p) for p in cell.vertices],
                "edges": [f"{family}{k}" for family, k in cell.edge_lines],
                "area": cell.area,
                "point": list(cell.point),
                "coding": cell.coding,
            }
            for cell in partition.cells
        ],
        "adjacency": [list(entry) for entry in partition.adjacency],
    }
