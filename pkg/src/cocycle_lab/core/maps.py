"""Piecewise maps on the torus and their registry.

A map is a partition of [0, 1)^ρ into half-open rectangles (or a triangle and
its complement) with a vectorized evaluator per cell. Cells are addressed by
the index pair (i, j) of the rectangle; triangle maps use i = 1 inside the
triangle and i = 0 outside.

Registry names::

    zero, psi, step(β), quadratic, xy_quarter, gamma(γ1,γ2),
    gamma_pair(γ1,γ2), triangle0, indicator(a,b,c), delta0, delta1,
    harmonic(h1,h2), drift(m)
"""

from __future__ import annotations

import math
import re
from collections.abc import Callable
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from ..utils.exceptions import ConfigurationError
from ..utils.logging import get_logger
from .models import MapClass, TriangleSpec
from .values import parse_value, value_to_mpf

logger = get_logger(__name__)

PieceFn = Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray], np.ndarray]

_NAME_PATTERN = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\((.*)\))?\s*$")


@dataclass(frozen=True)
class SawtoothTerm:
    """weight · ψ(⟨form, x⟩ + shift) with ψ(u) = {u} − 1/2."""

    form: tuple[int, ...]
    shift: float
    weight: float


@dataclass(frozen=True)
class ProductTerm:
    """weight · {x_1 + shift1}·{x_2 + shift2}."""

    shift1: float
    shift2: float
    weight: float


def sawtooth(u: np.ndarray) -> np.ndarray:
    return u - np.floor(u) - 0.5


@dataclass(frozen=True, eq=False)
class PiecewisePlanarMap:
    """A map T^ρ → ℝ^d given cell by cell.

    ``breaks1`` and ``breaks2`` are the rectangle edges including 0 and 1.
    ``piece(x1, x2, i, j)`` returns an (N, d) array and ``gradient`` an
    (N, d, ρ) array of first partials on the open cells.
    """

    name: str
    class_tag: MapClass
    rho: int
    dim: int
    breaks1: np.ndarray
    breaks2: np.ndarray
    piece: PieceFn
    gradient: PieceFn | None = None
    mean: tuple[float, ...] = ()
    hessian_bound: float | None = None
    region: TriangleSpec | None = None
    continuous: bool = False
    sawtooth: tuple[SawtoothTerm, ...] = ()
    sawtooth_constant: float = 0.0
    products: tuple[ProductTerm, ...] = ()
    product_constant: float = 0.0
    decay_forms: tuple[tuple[tuple[float, ...], ...], ...] = ()
    variation: float | None = None
    integer_valued: bool = False
    params: dict[str, Any] = field(default_factory=dict)

    @property
    def centered(self) -> bool:
        return all(abs(m) < 1e-15 for m in self.mean)

    @property
    def has_sawtooth_form(self) -> bool:
        return bool(self.sawtooth)

    @property
    def has_product_form(self) -> bool:
        return bool(self.products)

    def _coords(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.rho:
            raise ValueError(
                f"Map {self.name} lives on T^{self.rho}, got points of width {x.shape[1]}"
            )
        x = x - np.floor(x)
        x2 = x[:, 1] if self.rho == 2 else np.zeros(len(x))
        return x[:, 0], x2

    def in_region(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        """Membership of the open triangle, tested on the lifts y and y − 1."""
        tri = self.region
        if tri is None:
            raise ValueError(f"Map {self.name} has no triangle region")
        lower = tri.b * x1 / tri.a
        upper = tri.c + (tri.b - tri.c) * x1 / tri.a
        inside = np.zeros(len(x1), dtype=bool)
        for lift in (x2, x2 - 1.0):
            inside |= (lower < lift) & (lift < upper)
        return inside & (x1 < tri.a)

    def locate(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Cell indices (i, j) of each point."""
        x1, x2 = self._coords(x)
        return self._locate(x1, x2)

    def _locate(self, x1: np.ndarray, x2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if self.class_tag is MapClass.TRIANGLE:
            return self.in_region(x1, x2).astype(np.int64), np.zeros(len(x1), np.int64)
        i = np.searchsorted(self.breaks1, x1, side="right") - 1
        j = np.searchsorted(self.breaks2, x2, side="right") - 1
        i = np.clip(i, 0, len(self.breaks1) - 2)
        j = np.clip(j, 0, len(self.breaks2) - 2)
        return i, j

    def evaluate_array(self, x: np.ndarray) -> np.ndarray:
        """Values at an (N, ρ) array of points, shape (N, d)."""
        x1, x2 = self._coords(x)
        i, j = self._locate(x1, x2)
        return np.asarray(self.piece(x1, x2, i, j), dtype=np.float64).reshape(
            len(x1), self.dim
        )

    def gradient_array(self, x: np.ndarray) -> np.ndarray:
        if self.gradient is None:
            raise ValueError(f"Map {self.name} ({self.class_tag.value}) has no gradient")
        x1, x2 = self._coords(x)
        i, j = self._locate(x1, x2)
        return np.asarray(self.gradient(x1, x2, i, j), dtype=np.float64).reshape(
            len(x1), self.dim, self.rho
        )

    def boundary_distance(self, x: np.ndarray) -> np.ndarray:
        """Torus distance from each point to the nearest discontinuity line."""
        x1, x2 = self._coords(x)
        if self.continuous:
            return np.full(len(x1), np.inf)
        if self.class_tag is MapClass.TRIANGLE:
            return _triangle_distance(self.region, x1, x2)
        dist = _line_distance(x1, self.breaks1[:-1])
        if self.rho == 2:
            dist = np.minimum(dist, _line_distance(x2, self.breaks2[:-1]))
        return dist

    def sawtooth_value(self, x: np.ndarray) -> np.ndarray:
        """Evaluate the sawtooth decomposition (first output component)."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        total = np.full(len(x), self.sawtooth_constant)
        for term in self.sawtooth:
            total += term.weight * sawtooth(x @ np.asarray(term.form, float) + term.shift)
        return total

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "class": self.class_tag.value,
            "rho": self.rho,
            "dim": self.dim,
            "mean": list(self.mean),
            "params": self.params,
        }


def _line_distance(u: np.ndarray, lines: np.ndarray) -> np.ndarray:
    if len(lines) == 0:
        return np.full(len(u), np.inf)
    diff = np.abs(u[:, None] - lines[None, :])
    diff = np.minimum(diff, 1.0 - diff)
    return diff.min(axis=1)


def _segment_distance(
    px: np.ndarray, py: np.ndarray, a: tuple[float, float], b: tuple[float, float]
) -> np.ndarray:
    ax, ay = a
    dx, dy = b[0] - ax, b[1] - ay
    length2 = dx * dx + dy * dy
    t = np.clip(((px - ax) * dx + (py - ay) * dy) / length2, 0.0, 1.0)
    return np.hypot(px - (ax + t * dx), py - (ay + t * dy))


def _triangle_distance(tri: TriangleSpec, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    corners = [(0.0, 0.0), (tri.a, tri.b), (0.0, tri.c)]
    edges = [(corners[0], corners[1]), (corners[1], corners[2]), (corners[2], corners[0])]
    best = np.full(len(x1), np.inf)
    for sx in (-1.0, 0.0, 1.0):
        for sy in (-1.0, 0.0, 1.0):
            for start, end in edges:
                best = np.minimum(best, _segment_distance(x1 + sx, x2 + sy, start, end))
    return best


def gamma_mean(gamma: float) -> float:
    """∫_0^1 {γx} dx."""
    whole = math.floor(gamma)
    rest = gamma - whole
    return (whole / 2 + rest * rest / 2) / gamma


def _gamma_breaks(gamma: float) -> np.ndarray:
    inner = [k / gamma for k in range(1, math.ceil(gamma)) if k / gamma < 1]
    return np.array([0.0, *inner, 1.0])


# Builders


def _zero(rho: int) -> PiecewisePlanarMap:
    return PiecewisePlanarMap(
        name="zero",
        class_tag=MapClass.G,
        rho=rho,
        dim=1,
        breaks1=np.array([0.0, 1.0]),
        breaks2=np.array([0.0, 1.0]),
        piece=lambda x1, x2, i, j: np.zeros((len(x1), 1)),
        gradient=lambda x1, x2, i, j: np.zeros((len(x1), 1, rho)),
        mean=(0.0,),
        hessian_bound=0.0,
        continuous=True,
        variation=0.0,
        integer_valued=True,
    )


def _drift(m: float, rho: int) -> PiecewisePlanarMap:
    def piece(x1, x2, i, j):
        return (x1 - 0.5 + m)[:, None]

    def gradient(x1, x2, i, j):
        grad = np.zeros((len(x1), 1, rho))
        grad[:, 0, 0] = 1.0
        return grad

    return PiecewisePlanarMap(
        name=f"drift({m:g})",
        class_tag=MapClass.F1,
        rho=rho,
        dim=1,
        breaks1=np.array([0.0, 1.0]),
        breaks2=np.array([0.0, 1.0]),
        piece=piece,
        gradient=gradient,
        mean=(m,),
        sawtooth=(SawtoothTerm((1,) + (0,) * (rho - 1), 0.0, 1.0),),
        sawtooth_constant=m,
        variation=1.0,
        params={"m": m},
    )


def _psi(rho: int) -> PiecewisePlanarMap:
    return replace(_drift(0.0, rho), name="psi", params={})


def _step(beta: float) -> PiecewisePlanarMap:
    if not 0.0 < beta < 1.0:
        raise ValueError("step(β) needs 0 < β < 1")

    def piece(x1, x2, i, j):
        return np.where(i == 0, 1.0 - beta, -beta)[:, None]

    return PiecewisePlanarMap(
        name=f"step({beta:g})",
        class_tag=MapClass.STEP,
        rho=1,
        dim=1,
        breaks1=np.array([0.0, beta, 1.0]),
        breaks2=np.array([0.0, 1.0]),
        piece=piece,
        mean=(0.0,),
        sawtooth=(SawtoothTerm((1,), -beta, 1.0), SawtoothTerm((1,), 0.0, -1.0)),
        variation=2.0,
        params={"beta": beta},
    )


def _quadratic() -> PiecewisePlanarMap:
    return PiecewisePlanarMap(
        name="quadratic",
        class_tag=MapClass.F1,
        rho=1,
        dim=1,
        breaks1=np.array([0.0, 1.0]),
        breaks2=np.array([0.0, 1.0]),
        piece=lambda x1, x2, i, j: (x1 * (1.0 - x1) - 1.0 / 6.0)[:, None],
        gradient=lambda x1, x2, i, j: (1.0 - 2.0 * x1)[:, None, None],
        mean=(0.0,),
        continuous=True,
        variation=0.5,
    )


def _xy_quarter() -> PiecewisePlanarMap:
    def gradient(x1, x2, i, j):
        return np.stack([x2, x1], axis=-1)[:, None, :]

    return PiecewisePlanarMap(
        name="xy_quarter",
        class_tag=MapClass.F2,
        rho=2,
        dim=1,
        breaks1=np.array([0.0, 1.0]),
        breaks2=np.array([0.0, 1.0]),
        piece=lambda x1, x2, i, j: (x1 * x2 - 0.25)[:, None],
        gradient=gradient,
        mean=(0.0,),
        products=(ProductTerm(0.0, 0.0, 1.0),),
        product_constant=-0.25,
    )


def _gamma_components(g1: float, g2: float):
    mean = gamma_mean(g1) * gamma_mean(g2)

    def value(x1, x2, i, j):
        return (g1 * x1 - i) * (g2 * x2 - j) - mean

    def grad(x1, x2, i, j):
        return np.stack([g1 * (g2 * x2 - j), g2 * (g1 * x1 - i)], axis=-1)

    return value, grad


def _gamma(g1: float, g2: float) -> PiecewisePlanarMap:
    if g1 <= 0 or g2 <= 0:
        raise ValueError("gamma(γ1,γ2) needs positive parameters")
    value, grad = _gamma_components(g1, g2)
    return PiecewisePlanarMap(
        name=f"gamma({g1:g},{g2:g})",
        class_tag=MapClass.F2,
        rho=2,
        dim=1,
        breaks1=_gamma_breaks(g1),
        breaks2=_gamma_breaks(g2),
        piece=lambda x1, x2, i, j: value(x1, x2, i, j)[:, None],
        gradient=lambda x1, x2, i, j: grad(x1, x2, i, j)[:, None, :],
        mean=(0.0,),
        params={"gamma1": g1, "gamma2": g2},
    )


def _gamma_pair(g1: float, g2: float) -> PiecewisePlanarMap:
    if g1 <= 0 or g2 <= 0:
        raise ValueError("gamma_pair(γ1,γ2) needs positive parameters")
    value, grad = _gamma_components(g1, g2)

    def piece(x1, x2, i, j):
        return np.stack([value(x1, x2, i, j), x1 * x2 - 0.25], axis=-1)

    def gradient(x1, x2, i, j):
        return np.stack([grad(x1, x2, i, j), np.stack([x2, x1], axis=-1)], axis=1)

    return PiecewisePlanarMap(
        name=f"gamma_pair({g1:g},{g2:g})",
        class_tag=MapClass.F2,
        rho=2,
        dim=2,
        breaks1=_gamma_breaks(g1),
        breaks2=_gamma_breaks(g2),
        piece=piece,
        gradient=gradient,
        mean=(0.0, 0.0),
        params={"gamma1": g1, "gamma2": g2},
    )


def _triangle_map(
    name: str,
    tri: TriangleSpec,
    offset: float,
    terms: tuple[SawtoothTerm, ...] = (),
    constant: float = 0.0,
    params: dict | None = None,
) -> PiecewisePlanarMap:
    def piece(x1, x2, i, j):
        return (i.astype(np.float64) - offset)[:, None]

    return PiecewisePlanarMap(
        name=name,
        class_tag=MapClass.TRIANGLE,
        rho=2,
        dim=1,
        breaks1=np.array([0.0, 1.0]),
        breaks2=np.array([0.0, 1.0]),
        piece=piece,
        mean=(tri.area - offset,),
        region=tri,
        sawtooth=terms,
        sawtooth_constant=constant,
        decay_forms=tri.decay_forms(),
        integer_valued=offset == 0.0,
        params=params or {"a": tri.a, "b": tri.b, "c": tri.c},
    )


# 1_{x<y} = ψ(x − y) + ψ(y) − ψ(x) + 1/2
_DELTA0_TERMS = (
    SawtoothTerm((1, -1), 0.0, 1.0),
    SawtoothTerm((0, 1), 0.0, 1.0),
    SawtoothTerm((1, 0), 0.0, -1.0),
)
# 1_{x+y<1} = ψ(x + y) − ψ(x) − ψ(y) + 1/2
_DELTA1_TERMS = (
    SawtoothTerm((1, 1), 0.0, 1.0),
    SawtoothTerm((1, 0), 0.0, -1.0),
    SawtoothTerm((0, 1), 0.0, -1.0),
)


def _harmonic(h1: int, h2: int) -> PiecewisePlanarMap:
    k1, k2 = 2 * math.pi * h1, 2 * math.pi * h2

    def gradient(x1, x2, i, j):
        s = -np.sin(k1 * x1 + k2 * x2)
        return np.stack([k1 * s, k2 * s], axis=-1)[:, None, :]

    return PiecewisePlanarMap(
        name=f"harmonic({h1},{h2})",
        class_tag=MapClass.G,
        rho=2,
        dim=1,
        breaks1=np.array([0.0, 1.0]),
        breaks2=np.array([0.0, 1.0]),
        piece=lambda x1, x2, i, j: np.cos(k1 * x1 + k2 * x2)[:, None],
        gradient=gradient,
        mean=(1.0 if h1 == h2 == 0 else 0.0,),
        hessian_bound=k1 * k1 + k2 * k2,
        continuous=True,
        params={"h": [h1, h2]},
    )


def _as_int(value: float, name: str) -> int:
    if value != int(value):
        raise ConfigurationError(f"{name} expects integer arguments")
    return int(value)


def _builders() -> dict[str, tuple[int, Callable[..., PiecewisePlanarMap]]]:
    return {
        "zero": (0, lambda rho: _zero(rho)),
        "psi": (0, lambda rho: _psi(rho)),
        "drift": (1, lambda rho, m: _drift(m, rho)),
        "step": (1, lambda rho, beta: _step(beta)),
        "quadratic": (0, lambda rho: _quadratic()),
        "xy_quarter": (0, lambda rho: _xy_quarter()),
        "gamma": (2, lambda rho, g1, g2: _gamma(g1, g2)),
        "gamma_pair": (2, lambda rho, g1, g2: _gamma_pair(g1, g2)),
        "triangle0": (
            0,
            lambda rho: _triangle_map(
                "triangle0", TriangleSpec(1.0, 1.0, 1.0), 0.5, _DELTA0_TERMS
            ),
        ),
        "indicator": (
            3,
            lambda rho, a, b, c: _triangle_map(
                f"indicator({a:g},{b:g},{c:g})",
                TriangleSpec(a, b, c),
                a * c / 2,
            ),
        ),
        "delta0": (
            0,
            lambda rho: _triangle_map(
                "delta0", TriangleSpec(1.0, 1.0, 1.0), 0.0, _DELTA0_TERMS, 0.5
            ),
        ),
        "delta1": (
            0,
            lambda rho: _triangle_map(
                "delta1", TriangleSpec(1.0, 0.0, 1.0), 0.0, _DELTA1_TERMS, 0.5
            ),
        ),
        "harmonic": (
            2,
            lambda rho, h1, h2: _harmonic(_as_int(h1, "harmonic"), _as_int(h2, "harmonic")),
        ),
    }


MAP_NAMES = tuple(sorted(_builders()))


def _parse_args(text: str | None) -> list[float]:
    if text is None or not text.strip():
        return []
    text = text.strip()
    if text.startswith("Δ(") and text.endswith(")"):
        text = text[2:-1]
    args = []
    for part in text.split(","):
        value = parse_value(part.strip())
        args.append(float(value_to_mpf(value)))
    return args


def get_map(spec: str, rho: int | None = None) -> PiecewisePlanarMap:
    """Build a registry map from ``name`` or ``name(arg, ...)``.

    Args:
        spec: Registry expression
        rho: Torus dimension for maps that accept either (zero, psi, drift)

    Raises:
        ConfigurationError: Unknown name or wrong argument count
    """
    match = _NAME_PATTERN.match(spec)
    if not match:
        raise ConfigurationError(f"Malformed map name: {spec!r}")
    name, arg_text = match.group(1), match.group(2)
    builders = _builders()
    if name not in builders:
        raise ConfigurationError(
            f"Unknown map {name!r}; available: {', '.join(MAP_NAMES)}"
        )
    arity, builder = builders[name]
    args = _parse_args(arg_text)
    if len(args) != arity:
        raise ConfigurationError(f"Map {name} takes {arity} arguments, got {len(args)}")
    try:
        built = builder(rho or 1, *args)
    except ValueError as e:
        raise ConfigurationError(f"Invalid parameters for map {name}: {e}") from e
    if rho is not None and built.rho != rho:
        raise ConfigurationError(f"Map {name} lives on T^{built.rho}, not T^{rho}")
    logger.debug(f"Built map {built.name} ({built.class_tag.value}, d={built.dim})")
    return built


__all__ = [
    "MAP_NAMES",
    "PiecewisePlanarMap",
    "ProductTerm",
    "SawtoothTerm",
    "gamma_mean",
    "get_map",
    "sawtooth",
]
