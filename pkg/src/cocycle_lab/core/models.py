"""Data models for the cocycle laboratory.

Reports returned by the domain modules are frozen dataclasses. Fields marked
``HIDDEN`` hold bulky or non-serializable state (orbit arrays, back
references) and are left out of JSON artifacts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
from mpmath import mp

from ..utils.logging import get_logger

logger = get_logger(__name__)

HIDDEN = {"report": False}


class SourceKind(Enum):
    """Origin of an expanded real number."""

    DECIMAL = "decimal-literal"
    SURD = "quadratic-surd"
    EXPRESSION = "expression"
    RATIONAL = "rational"


class MapClass(Enum):
    """Function classes a piecewise map can belong to."""

    STEP = "STEP"
    F1 = "F1"
    F2 = "F2"
    G = "G"
    TRIANGLE = "TRIANGLE"

    @property
    def has_gradient(self) -> bool:
        return self in (MapClass.F1, MapClass.F2, MapClass.G)


class FiberMode(Enum):
    """Fiber of a skew product."""

    REAL = "real"
    TORUS = "torus"


# Diophantine toolkit


@dataclass(frozen=True)
class ContinuedFraction:
    """Partial quotients a_1, a_2, … of a number reduced mod 1."""

    value: Any
    quotients: tuple[int, ...]
    source: SourceKind
    integer_part: int = 0
    precision_bits: int = 256
    precision_exhausted: bool = False
    preperiod: int | None = None
    period: int | None = None
    origin: Any = field(default=None, metadata=HIDDEN)

    @property
    def depth(self) -> int:
        return len(self.quotients)

    def a(self, n: int) -> int:
        """The partial quotient a_n, 1-based."""
        return self.quotients[n - 1]


@dataclass(frozen=True)
class ConvergentTable:
    """Denominators q_0, q_1, … and numerators p_0, p_1, … of the convergents."""

    q: tuple[int, ...]
    p: tuple[int, ...]
    quotients: tuple[int, ...]
    chain: tuple[float, ...] = ()
    expansion: Any = field(default=None, metadata=HIDDEN)

    @property
    def depth(self) -> int:
        return len(self.q)


@dataclass(frozen=True)
class OstrowskiDigits:
    """n = Σ b_k q_k with the digits listed from b_0 upwards."""

    n: int
    digits: tuple[int, ...]
    canonical: bool = True
    base: ConvergentTable | None = field(default=None, metadata=HIDDEN)

    def reconstruct(self) -> int:
        if self.base is None:
            raise ValueError("Digits are detached from their convergent table")
        return sum(b * q for b, q in zip(self.digits, self.base.q, strict=False))

    def satisfies_bounds(self) -> bool:
        if self.base is None:
            return False
        quotients = self.base.quotients
        if self.digits and self.digits[0] > quotients[0] - 1:
            return False
        return all(
            0 <= b <= quotients[k] for k, b in enumerate(self.digits[1:], start=1)
        )


@dataclass(frozen=True)
class BadMargin:
    """min |q|·‖qθ − x‖ over q_min ≤ |q| ≤ q_max."""

    theta: str
    x: str
    q_min: int
    q_max: int
    margin: float
    argmin_q: int
    certified_bits: int


@dataclass(frozen=True)
class TypeProbeReport:
    eta: float
    epsilon: float
    q_max: int
    inf_low: float
    inf_high: float
    argmin_low: int
    argmin_high: int
    checkpoints: list[dict[str, float]]
    conclusive: bool = False
    note: str = "finite scan; evidence only"


@dataclass(frozen=True)
class SeriesPlateau:
    eta: float
    delta: float
    rows: list[tuple[int, float, float]]

    @property
    def sums(self) -> list[float]:
        return [row[1] for row in self.rows]


# Torus dynamics


@dataclass(frozen=True)
class RotationVector:
    """A rotation number α ∈ T^ρ held as high-precision reals in [0, 1)."""

    components: tuple[Any, ...]
    precision_bits: int = 256
    labels: tuple[str, ...] = ()

    @property
    def rho(self) -> int:
        return len(self.components)

    def floats(self) -> np.ndarray:
        with mp.workprec(self.precision_bits):
            return np.array([float(c) for c in self.components])

    def to_dict(self) -> dict[str, Any]:
        with mp.workprec(self.precision_bits):
            return {
                "components": [mp.nstr(c, 20) for c in self.components],
                "labels": list(self.labels),
                "precision_bits": self.precision_bits,
            }


@dataclass(frozen=True)
class RelationReport:
    """Outcome of the integer-relation search on (1, α_1, …, α_ρ)."""

    totally_irrational: bool
    relation: tuple[int, ...] | None
    relation_bound: int
    certify_bits: int


@dataclass(frozen=True)
class Evaluation:
    values: tuple[float, ...]
    cell: tuple[int, ...]
    boundary_hit: bool
    boundary_distance: float


@dataclass(frozen=True)
class ErgodicSum:
    value: np.ndarray
    n: int
    boundary_hits: int

    @property
    def degenerate(self) -> bool:
        return self.boundary_hits > self.n * 1e-6


@dataclass(frozen=True)
class ErgodicSumSeries:
    map_name: str
    x0: tuple[float, ...]
    schedule: tuple[int, ...]
    values: np.ndarray
    boundary_hits: int
    sup_stats: tuple[float, ...] | None = None

    def rows(self) -> list[list[Any]]:
        rows = []
        for i, n in enumerate(self.schedule):
            sup = self.sup_stats[i] if self.sup_stats is not None else float("nan")
            rows.append([n, *self.values[i].tolist(), sup, self.boundary_hits])
        return rows


@dataclass(frozen=True)
class ShadowAudit:
    """Fast ergodic sum compared with an exact fixed-point re-run."""

    n: int
    fast: tuple[float, ...]
    shadow: tuple[float, ...]
    difference: float
    moved_points: int
    shadow_bits: int


@dataclass(frozen=True)
class LambdaFunctionals:
    """λ_j(φ^i) = ∫ ∂φ^i/∂x_j by boundary traces and by quadrature."""

    boundary: list[list[float]]
    quadrature: list[list[float]]
    max_disagreement: float
    det_M: float | None = None

    @property
    def lambda1(self) -> list[float]:
        """λ_1 of each output component."""
        return [row[0] for row in self.boundary]


@dataclass(frozen=True)
class SandwichReport:
    n: int
    samples: int
    pass_fraction: float
    ratio_min: float
    ratio_max: float
    lambda1: float


@dataclass(frozen=True)
class DeviationReport:
    """Relative error of the first-order expansion φ_n(x + u) ≈ φ_n(x) + n·Λu."""

    n: int
    samples: int
    tolerance: float
    pass_fraction: float
    max_error: float
    mean_error: float
    lambda_matrix: list[list[float]]


# Fourier laboratory


@dataclass(frozen=True)
class TriangleSpec:
    """The triangle with vertices (0, 0), (a, b), (0, c)."""

    a: float
    b: float
    c: float

    def __post_init__(self) -> None:
        if not (0 < self.a <= 1 and 0 < self.c <= 1):
            raise ValueError("Triangle needs 0 < a, c <= 1")
        if not (self.c - 1 <= self.b <= 1):
            raise ValueError("Triangle needs c - 1 <= b <= 1")

    @property
    def area(self) -> float:
        return self.a * self.c / 2

    def decay_forms(self) -> tuple[tuple[tuple[float, ...], ...], ...]:
        """Linear-form pairs (ℓ_{2k-1}, ℓ_{2k}) acting on (s, t)."""
        t_form = (0.0, 1.0)
        return (
            (t_form, (1.0, 0.0)),
            (t_form, (self.a, self.b)),
            (t_form, (self.a, self.b - self.c)),
        )


@dataclass(frozen=True)
class FourierSpectrum:
    """Sparse coefficient table h ↦ c_h over a box |h|_∞ ≤ h_max."""

    dims: int
    index: np.ndarray
    values: np.ndarray
    h_max: int
    decay_forms: tuple[tuple[tuple[float, ...], ...], ...] = ()
    decay_constant: float | None = None
    real_source: bool = True
    label: str = ""

    def lookup(self) -> dict[tuple[int, ...], complex]:
        return {
            tuple(int(v) for v in h): complex(c)
            for h, c in zip(self.index, self.values, strict=True)
        }

    def hermitian_defect(self) -> float:
        """max |c_{-h} - conj(c_h)| over stored pairs."""
        table = self.lookup()
        defect = 0.0
        for h, c in table.items():
            mirror = table.get(tuple(-v for v in h))
            if mirror is not None:
                defect = max(defect, abs(mirror - c.conjugate()))
        return defect

    def rows(self) -> list[list[Any]]:
        rows = []
        for h, c in zip(self.index, self.values, strict=True):
            key = [int(v) for v in h] + ([0] if self.dims == 1 else [])
            rows.append([*key, float(c.real), float(c.imag)])
        return rows


@dataclass(frozen=True)
class DecayCheck:
    fitted_C: float
    violations: list[tuple[int, ...]]
    h_max: int
    checked: int


@dataclass(frozen=True)
class GrowthTable:
    t: float
    rows: list[tuple[int, float, float, float]]
    fitted_exponent: float | None


@dataclass(frozen=True)
class NiederreiterPlateau:
    """Partial sums over growing boxes with their relative increments."""

    t: float
    forms: tuple[tuple[int, ...], ...]
    rows: list[tuple[int, float, float]]

    @property
    def sums(self) -> list[float]:
        return [row[1] for row in self.rows]


@dataclass(frozen=True)
class CoboundaryResult:
    psi: FourierSpectrum = field(metadata=HIDDEN)
    h_max: int
    residual: float
    exact_residual: float | None
    truncation_estimate: float
    psi_l1: float
    grid: int


# Partition geometry


@dataclass(frozen=True)
class PartitionCell:
    """A convex cell of a torus partition.

    Vertices run counter-clockwise inside the closed unit square. Edge m joins
    vertex m to vertex m + 1 and lies on the line ``edge_lines[m]``, a pair
    (family, k) with family "V" (x = {−kα₁}), "H" (y = {−kα₂}) or "D"
    (x − y = {−k(α₁ − α₂)}). ``coding`` has one letter per i < ℓ, "1" when
    T^i maps the cell into Δ₀.
    """

    id: int
    rect: tuple[int, int]
    vertices: tuple[tuple[float, float], ...]
    edge_lines: tuple[tuple[str, int], ...]
    area: float
    point: tuple[float, float]
    coding: str | None = None
    vertex_keys: tuple[Any, ...] = field(default=(), metadata=HIDDEN)
    edge_keys: tuple[Any, ...] = field(default=(), metadata=HIDDEN)

    @property
    def vertical_edges(self) -> list[tuple[float, int]]:
        """(length, k) for every edge on a vertical line."""
        edges = []
        for m, (family, k) in enumerate(self.edge_lines):
            if family == "V":
                y0 = self.vertices[m][1]
                y1 = self.vertices[(m + 1) % len(self.vertices)][1]
                edges.append((abs(y1 - y0), k))
        return edges

    @property
    def diameter(self) -> float:
        pts = np.asarray(self.vertices)
        return float(np.max(np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)))


@dataclass(frozen=True)
class TorusPartition:
    """The partition P_ℓ (with diagonals) or R_ℓ (without) of T².

    Cells of one rectangle of the vertical/horizontal grid are stored
    contiguously, ordered by increasing y − x.
    """

    ell: int
    alpha: RotationVector
    include_diagonals: bool
    v_lines: tuple[float, ...]
    h_lines: tuple[float, ...]
    d_lines: tuple[float, ...]
    cells: list[PartitionCell]
    adjacency: list[tuple[int, int, str, int]]
    columns: np.ndarray = field(default=None, metadata=HIDDEN)
    rows: np.ndarray = field(default=None, metadata=HIDDEN)
    rect_first: np.ndarray = field(default=None, metadata=HIDDEN)
    rect_cuts: tuple[np.ndarray, ...] = field(default=(), metadata=HIDDEN)

    @property
    def card(self) -> int:
        return len(self.cells)

    @property
    def expected_card(self) -> int:
        ell = self.ell
        return 3 * ell * ell - ell if self.include_diagonals else ell * ell

    def locate(self, points: Any) -> np.ndarray:
        """Cell ids of points of T²: rectangle lookup, then the diagonal strip."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        x = pts[:, 0] - np.floor(pts[:, 0])
        y = pts[:, 1] - np.floor(pts[:, 1])
        last = self.ell - 1
        i = np.clip(np.searchsorted(self.columns, x, side="right") - 1, 0, last)
        j = np.clip(np.searchsorted(self.rows, y, side="right") - 1, 0, last)
        rect = i * self.ell + j
        ids = self.rect_first[i, j].astype(np.int64)
        s = y - x
        for r in np.unique(rect):
            mask = rect == r
            ids[mask] += np.searchsorted(self.rect_cuts[r], s[mask])
        return ids


@dataclass(frozen=True)
class GapStats:
    n: int
    points: int
    min_gap: float
    max_gap: float
    c_hat: float
    c_prime_hat: float
    distinct_gaps: int


@dataclass(frozen=True)
class DiscontinuityMargin:
    axis: int
    difference: float
    margin: float
    argmin_q: int


@dataclass(frozen=True)
class DiscontinuityReport:
    """Bad_Z margins of break differences and the gap constants they imply."""

    map_name: str
    hypothesis: str
    q_max: int
    floor: float
    margins: list[DiscontinuityMargin]
    gaps: list[GapStats]
    c_low: float
    c_high: float

    @property
    def min_margin(self) -> float:
        return min(m.margin for m in self.margins)

    @property
    def holds(self) -> bool:
        return self.min_margin >= self.floor and 0.0 < self.c_low <= self.c_high


@dataclass(frozen=True)
class SchmidtRecord:
    n: int
    n1: int
    n2: int
    distance: float
    exponent: float | None
    highlighted: bool


@dataclass(frozen=True)
class EqfunctRow:
    ell: int
    cells: int
    max_diameter: float
    max_neighbors: int
    c2_hat: float
    min_area_times_card: float
    family_size: int
    family_fraction: float
    one_letter_ok: bool
    witnesses: list[int] = field(default_factory=list)


@dataclass(frozen=True)
class EqfunctReport:
    rows: list[EqfunctRow]
    checks: dict[str, bool]
    fitted_c2: float
    c2_stability: float

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


# Ergodicity probes


@dataclass(frozen=True)
class SkewOrbit:
    mode: FiberMode
    N: int
    decimation: int
    times: np.ndarray = field(metadata=HIDDEN)
    base: np.ndarray = field(metadata=HIDDEN)
    fiber: np.ndarray = field(metadata=HIDDEN)
    boundary_hits: int = 0
    telescoping_error: float = 0.0

    def rows(self) -> list[list[Any]]:
        return [
            [int(n), *self.base[i].tolist(), *self.fiber[i].tolist()]
            for i, n in enumerate(self.times)
        ]


@dataclass(frozen=True)
class RecurrenceReport:
    N_max: int
    points: int
    radii: tuple[float, ...]
    min_abs: np.ndarray = field(metadata=HIDDEN)
    stagnant: np.ndarray = field(metadata=HIDDEN)
    hit_fraction: dict[str, float] = field(default_factory=dict)
    return_quantiles: dict[str, list[float]] = field(default_factory=dict)
    profile_schedule: tuple[int, ...] = ()
    profile: np.ndarray = field(default=None, metadata=HIDDEN)

    @property
    def stagnant_fraction(self) -> float:
        return float(np.mean(self.stagnant)) if self.stagnant.size else 0.0


@dataclass(frozen=True)
class L2GrowthReport:
    schedule: tuple[int, ...]
    norms: tuple[float, ...]
    slope: float
    ci: tuple[float, float]
    cocycle_dim: int
    verdict: str


@dataclass(frozen=True)
class EssentialValueReport:
    window: tuple[float, float]
    absolute: bool
    grid: int
    base_measure: float
    hits: list[tuple[int, float]]

    @property
    def positive(self) -> list[int]:
        return [n for n, fraction in self.hits if fraction > 0]


@dataclass(frozen=True)
class WeylRow:
    h: tuple[int, ...]
    k: tuple[int, ...]
    checkpoints: tuple[int, ...]
    envelope: tuple[float, ...]
    final_average: float

    @property
    def decay_ratio(self) -> float:
        last = self.envelope[-1]
        return float("inf") if last == 0 else self.envelope[0] / last


@dataclass(frozen=True)
class WeylReport:
    N: int
    a: tuple[float, ...]
    rows: list[WeylRow]


@dataclass(frozen=True)
class ConjugationReport:
    samples: int
    skipped: int
    max_residual: float


@dataclass(frozen=True)
class InducedCocycle:
    return_times: tuple[int, ...]
    induced_sums: np.ndarray = field(metadata=HIDDEN)
    identity_error: float = 0.0
    mean_return: float = 0.0
    base_measure: float = 0.0


# Runner


@dataclass(frozen=True)
class CriterionResult:
    name: str
    passed: bool
    measured: Any
    threshold: Any
    detail: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class SuiteReport:
    suite: str
    criteria: list[CriterionResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)

    def to_dict(self) -> dict[str, Any]:
        return {
            "suite": self.suite,
            "verdict": "PASS" if self.passed else "FAIL",
            "criteria": [
                {
                    "name": c.name,
                    "verdict": "PASS" if c.passed else "FAIL",
                    "measured": c.measured,
                    "threshold": c.threshold,
                    "detail": c.detail,
                }
                for c in self.criteria
            ],
        }


@dataclass(frozen=True)
class BenchReport:
    kernel: str
    size: int
    wall_seconds: float
    operations: int

    @property
    def ops_per_second(self) -> float:
        return self.operations / self.wall_seconds if self.wall_seconds > 0 else 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "kernel": self.kernel,
            "size": self.size,
            "wall_seconds": self.wall_seconds,
            "operations": self.operations,
            "ops_per_second": self.ops_per_second,
        }
