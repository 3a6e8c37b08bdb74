"""Fourier coefficients, decay bounds, coboundaries and L² growth sums.

Coefficients follow c_h = ∫ f(x) e^{-2πi⟨h,x⟩} dx. Small divisors ‖h·α‖ are
read from summed 64-bit phases so they keep full precision for large h.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence

import numpy as np
from scipy import integrate

from ..utils.exceptions import ConfigurationError, PrecisionError, ResonanceError
from ..utils.logging import get_logger
from ..utils.precision import torus_norms, unit_floats
from .dynamics import phase_kernels
from .maps import PiecewisePlanarMap
from .models import (
    CoboundaryResult,
    DecayCheck,
    FourierSpectrum,
    GrowthTable,
    MapClass,
    NiederreiterPlateau,
    RotationVector,
    TriangleSpec,
)

logger = get_logger(__name__)

SAWTOOTH_CONSTANT = 1.0 / (2.0 * math.pi)
_CHAIN_SLACK = 1.0 + 1e-9
_GRID_CHUNK = 512


def box_index(h_max: int, dims: int) -> np.ndarray:
    """All h with |h|_∞ ≤ h_max in lexicographic order, shape (K, dims)."""
    axis = np.arange(-h_max, h_max + 1)
    if dims == 1:
        return axis[:, None]
    H1, H2 = np.meshgrid(axis, axis, indexing="ij")
    return np.stack([H1.ravel(), H2.ravel()], axis=1)


def _segment_integral(omega: np.ndarray, a: float) -> np.ndarray:
    """∫_0^a e^{-2πiωx} dx."""
    return a * np.exp(-1j * np.pi * omega * a) * np.sinc(omega * a)


def triangle_coeff(tri: TriangleSpec, s, t) -> np.ndarray | complex:
    """Closed-form coefficient of 1_Δ at (s, t); vectorized over s and t.

    The inner integral over y turns the triangle into two exponential
    integrals along x; the t = 0 column is integrated directly.
    """
    scalar = np.ndim(s) == 0 and np.ndim(t) == 0
    s_arr, t_arr = np.broadcast_arrays(
        np.atleast_1d(np.asarray(s, dtype=np.float64)),
        np.atleast_1d(np.asarray(t, dtype=np.float64)),
    )
    a, b, c = tri.a, tri.b, tri.c
    out = np.empty(s_arr.shape, dtype=np.complex128)

    tn = t_arr != 0
    if np.any(tn):
        ss, tt = s_arr[tn], t_arr[tn]
        lower = _segment_integral(ss + tt * b / a, a)
        upper = np.exp(-2j * np.pi * tt * c) * _segment_integral(ss + tt * (b - c) / a, a)
        out[tn] = (lower - upper) / (2j * np.pi * tt)

    column = (~tn) & (s_arr != 0)
    if np.any(column):
        k = 2j * np.pi * s_arr[column]
        out[column] = c * (1.0 / k - (1.0 - np.exp(-k * a)) / (a * k * k))

    out[(~tn) & (s_arr == 0)] = a * c / 2
    return complex(out[0]) if scalar else out


def triangle_coeff_quadrature(
    tri: TriangleSpec, s: int, t: int, tol: float = 1e-11
) -> complex:
    """Adaptive two-dimensional quadrature of the same coefficient."""
    a, b, c = tri.a, tri.b, tri.c

    def lower(x: float) -> float:
        return b * x / a

    def upper(x: float) -> float:
        return c + (b - c) * x / a

    def phase(y: float, x: float) -> float:
        return 2 * math.pi * (s * x + t * y)

    real, _ = integrate.dblquad(
        lambda y, x: math.cos(phase(y, x)), 0.0, a, lower, upper, epsabs=tol, epsrel=tol
    )
    imag, _ = integrate.dblquad(
        lambda y, x: -math.sin(phase(y, x)), 0.0, a, lower, upper, epsabs=tol, epsrel=tol
    )
    return complex(real, imag)


def triangle_spectrum(
    tri: TriangleSpec, h_max: int, centered: bool = True, label: str = ""
) -> FourierSpectrum:
    """Coefficients of 1_Δ (minus its area when centered) over the box."""
    index = box_index(h_max, 2)
    values = np.asarray(triangle_coeff(tri, index[:, 0], index[:, 1]))
    if centered:
        values = np.where((index == 0).all(axis=1), 0.0, values)
    return FourierSpectrum(
        dims=2,
        index=index,
        values=values,
        h_max=h_max,
        decay_forms=tri.decay_forms(),
        label=label or f"triangle({tri.a:g},{tri.b:g},{tri.c:g})",
    )


def sawtooth_spectrum(h_max: int) -> FourierSpectrum:
    """ψ(x) = {x} − 1/2: c_r = i/(2πr), c_0 = 0."""
    index = box_index(h_max, 1)
    r = index[:, 0].astype(np.float64)
    values = np.zeros(len(r), dtype=np.complex128)
    nonzero = r != 0
    values[nonzero] = 1j / (2 * np.pi * r[nonzero])
    return FourierSpectrum(
        dims=1,
        index=index,
        values=values,
        h_max=h_max,
        decay_forms=(((1.0,),),),
        decay_constant=SAWTOOTH_CONSTANT,
        label="psi",
    )


def quadratic_spectrum(h_max: int) -> FourierSpectrum:
    """x(1 − x) − 1/6 = −(1/π²) Σ_{n≥1} cos(2πnx)/n²."""
    index = box_index(h_max, 1)
    n = index[:, 0].astype(np.float64)
    values = np.zeros(len(n), dtype=np.complex128)
    nonzero = n != 0
    values[nonzero] = -1.0 / (2 * np.pi**2 * n[nonzero] ** 2)
    return FourierSpectrum(
        dims=1,
        index=index,
        values=values,
        h_max=h_max,
        decay_forms=(((1.0,), (1.0,)),),
        decay_constant=1.0 / (2 * np.pi**2),
        label="quadratic",
    )


def quadratic_tail_bound(h_max: int) -> float:
    """Upper bound 1/(π²H) on sup |x(1 − x) − 1/6 − S_H(x)|, S_H the series cut at H.

    The tail (1/π²) Σ_{n>H} 1/n² is attained at x = 0.
    """
    if h_max < 1:
        raise ValueError("h_max must be at least 1")
    return 1.0 / (math.pi**2 * h_max)


def harmonic_spectrum(h: Sequence[int], h_max: int | None = None) -> FourierSpectrum:
    """cos 2π⟨h, x⟩: coefficient 1/2 at ±h."""
    h = tuple(int(v) for v in h)
    bound = h_max if h_max is not None else max(abs(v) for v in h)
    index = box_index(bound, len(h))
    values = np.zeros(len(index), dtype=np.complex128)
    for sign in (1, -1):
        hit = (index == np.asarray(h) * sign).all(axis=1)
        values[hit] += 0.5
    return FourierSpectrum(
        dims=len(h), index=index, values=values, h_max=bound, label=f"harmonic{h}"
    )


def spectrum_of_map(map_: PiecewisePlanarMap, h_max: int) -> FourierSpectrum:
    """Closed-form spectrum of a registry map.

    Raises:
        ConfigurationError: If the map has no closed-form spectrum
    """
    if map_.region is not None:
        return triangle_spectrum(map_.region, h_max, centered=map_.centered, label=map_.name)
    if map_.name == "psi" and map_.rho == 1:
        return sawtooth_spectrum(h_max)
    if map_.name == "quadratic":
        return quadratic_spectrum(h_max)
    if map_.name.startswith("harmonic"):
        return harmonic_spectrum(map_.params["h"], h_max)
    raise ConfigurationError(f"No closed-form spectrum for map {map_.name}")


def map_coeff_quadrature(
    map_: PiecewisePlanarMap, h: Sequence[int], component: int = 0, tol: float = 1e-11
) -> complex:
    """Coefficient of a registry map by cellwise adaptive quadrature."""
    h = tuple(int(v) for v in h)
    if len(h) != map_.rho:
        raise ValueError(f"Frequency {h} does not match T^{map_.rho}")

    def piece(i: int, j: int) -> Callable[[float, float], float]:
        def value(x1: float, x2: float) -> float:
            out = map_.piece(np.array([x1]), np.array([x2]), np.array([i]), np.array([j]))
            return float(np.asarray(out).reshape(1, map_.dim)[0, component])

        return value

    if map_.class_tag is MapClass.TRIANGLE:
        tri = map_.region
        inside, outside = piece(1, 0)(0.0, 0.0), piece(0, 0)(0.0, 0.0)
        coeff = (inside - outside) * triangle_coeff_quadrature(tri, h[0], h[1], tol)
        if h == (0, 0):
            coeff += outside
        return complex(coeff)

    parts_re, parts_im = [], []
    b1, b2 = map_.breaks1, map_.breaks2
    for i in range(len(b1) - 1):
        for j in range(len(b2) - 1):
            value = piece(i, j)
            if map_.rho == 1:
                for part, trig in ((parts_re, math.cos), (parts_im, math.sin)):
                    result, _ = integrate.quad(
                        lambda x, f=trig: value(x, 0.0) * f(2 * math.pi * h[0] * x),
                        b1[i],
                        b1[i + 1],
                        epsabs=tol,
                        epsrel=tol,
                        limit=200,
                    )
                    part.append(result)
                continue
            for part, trig in ((parts_re, math.cos), (parts_im, math.sin)):
                result, _ = integrate.dblquad(
                    lambda y, x, f=trig: value(x, y)
                    * f(2 * math.pi * (h[0] * x + h[1] * y)),
                    b1[i],
                    b1[i + 1],
                    b2[j],
                    b2[j + 1],
                    epsabs=tol,
                    epsrel=tol,
                )
                part.append(result)
    return complex(math.fsum(parts_re), -math.fsum(parts_im))


def _plus(u: np.ndarray) -> np.ndarray:
    return np.maximum(1.0, np.abs(u))


def decay_envelope(
    forms: tuple[tuple[tuple[float, ...], ...], ...], index: np.ndarray
) -> np.ndarray:
    """Σ over form groups of Π 1/|ℓ(h)|₊."""
    h = index.astype(np.float64)
    total = np.zeros(len(index))
    for group in forms:
        term = np.ones(len(index))
        for form in group:
            term /= _plus(h @ np.asarray(form, dtype=np.float64))
        total += term
    return total


def decay_bound_check(spectrum: FourierSpectrum, h_max: int | None = None) -> DecayCheck:
    """Fit the smallest C with |c_h| ≤ C·Σ_k 1/(|ℓ_{2k-1}(h)|₊|ℓ_{2k}(h)|₊)."""
    if not spectrum.decay_forms:
        raise ValueError(f"Spectrum {spectrum.label} carries no decay model")
    bound = h_max if h_max is not None else spectrum.h_max
    keep = np.abs(spectrum.index).max(axis=1) <= bound
    index, values = spectrum.index[keep], spectrum.values[keep]
    envelope = decay_envelope(spectrum.decay_forms, index)
    ratios = np.abs(values) / envelope
    fitted = float(ratios.max()) if len(ratios) else 0.0
    constant = spectrum.decay_constant if spectrum.decay_constant is not None else fitted
    over = ratios > constant * _CHAIN_SLACK
    violations = [tuple(int(v) for v in h) for h in index[over]]
    return DecayCheck(
        fitted_C=fitted, violations=violations, h_max=bound, checked=int(len(index))
    )


def dot_phases(alpha: RotationVector, index: np.ndarray) -> np.ndarray:
    """64-bit phases of ⟨h, α⟩ mod 1 for each row h of index."""
    kernels = phase_kernels(alpha)
    if index.shape[1] != len(kernels):
        raise ValueError(f"Frequencies of width {index.shape[1]} for a T^{alpha.rho} rotation")
    phase = np.zeros(len(index), dtype=np.uint64)
    for axis, kern in enumerate(kernels):
        phase = phase + kern.phases(index[:, axis])
    return phase


def _guarded_norms(phases: np.ndarray, index: np.ndarray, guard: float) -> np.ndarray:
    norms = torus_norms(phases)
    small = norms < guard
    if np.any(small):
        worst = tuple(int(v) for v in index[np.argmin(norms)])
        raise ResonanceError(
            f"‖h·α‖ = {norms.min():.3g} below guard {guard:g} at h = {worst}"
        )
    return norms


def l2_sum_growth(
    spectrum: FourierSpectrum,
    alpha: RotationVector,
    schedule: Sequence[int],
    t: float,
    guard: float = 1e-15,
) -> GrowthTable:
    """Exact truncated ‖Σ_{k<N} φ∘T^k‖₂² with its two upper bounds.

    For each N the table holds Σ|c_h|²·D_N(h·α), Σ|c_h|²·min(N, 1/‖h·α‖)² and
    N^{2−t}·Σ|c_h|²/‖h·α‖^t; the chain is checked term by term.

    Raises:
        ValueError: If t ∉ (1, 2) or the spectrum has a mean
        PrecisionError: If a term breaks the inequality chain
    """
    if not 1.0 < t < 2.0:
        raise ValueError("The growth exponent t must lie in (1, 2)")
    table = spectrum.lookup()
    zero = tuple([0] * spectrum.dims)
    if abs(table.get(zero, 0.0)) > 1e-12:
        raise ValueError("Spectrum must be centered (c_0 = 0)")

    weights = np.abs(spectrum.values) ** 2
    active = weights > 0
    index, weights = spectrum.index[active], weights[active]
    phases = dot_phases(alpha, index)
    norms = _guarded_norms(phases, index, guard)
    theta = unit_floats(phases)
    denominator = np.sin(np.pi * theta) ** 2
    series = math.fsum(weights / norms**t)

    rows = []
    for N in sorted(set(int(n) for n in schedule)):
        if N < 1:
            raise ValueError("Schedule entries must be positive")
        scaled = unit_floats(phases * np.uint64(N))
        dirichlet = np.sin(np.pi * scaled) ** 2 / denominator
        cap = np.minimum(float(N), 1.0 / norms) ** 2
        tail = N ** (2 - t) / norms**t
        if np.any(dirichlet > cap * _CHAIN_SLACK) or np.any(cap > tail * _CHAIN_SLACK):
            raise PrecisionError(f"Inequality chain fails at N={N}")
        rows.append(
            (
                N,
                math.fsum(weights * dirichlet),
                math.fsum(weights * cap),
                N ** (2 - t) * series,
            )
        )

    fitted = None
    positive = [(n, e) for n, e, _, _ in rows if e > 0]
    if len(positive) >= 2:
        logs = np.log([[n, e] for n, e in positive])
        fitted = float(np.polyfit(logs[:, 0], logs[:, 1], 1)[0])
    return GrowthTable(t=t, rows=rows, fitted_exponent=fitted)


def _form_matrix(forms: Sequence[Sequence[int]], rho: int) -> np.ndarray:
    matrix = np.asarray(forms, dtype=np.float64).reshape(-1, rho)
    if matrix.shape != (rho, rho) or abs(np.linalg.det(matrix)) < 1e-12:
        raise ValueError("Linear forms must be independent and match the dimension")
    return matrix


def _niederreiter_terms(
    alpha: RotationVector,
    forms: Sequence[Sequence[int]],
    t: float,
    h_max: int,
    guard: float,
) -> tuple[np.ndarray, np.ndarray]:
    if t <= 1.0:
        raise ValueError("The exponent t must exceed 1")
    matrix = _form_matrix(forms, alpha.rho)
    index = box_index(h_max, alpha.rho)
    index = index[(index != 0).any(axis=1)]
    norms = _guarded_norms(dot_phases(alpha, index), index, guard)
    R = np.prod(_plus(index.astype(np.float64) @ matrix.T), axis=1)
    return np.abs(index).max(axis=1), 1.0 / (R**2 * norms**t)


def niederreiter_sum(
    alpha: RotationVector,
    forms: Sequence[Sequence[int]],
    t: float,
    h_max: int,
    guard: float = 1e-15,
) -> float:
    """Σ_{0<|h|≤H} 1/(R(h)²‖h·α‖^t) with R(h) = Π|ℓ_i(h)|₊."""
    _, terms = _niederreiter_terms(alpha, forms, t, h_max, guard)
    return math.fsum(terms)


def niederreiter_plateau(
    alpha: RotationVector,
    forms: Sequence[Sequence[int]],
    t: float,
    schedule: Sequence[int],
    guard: float = 1e-15,
) -> NiederreiterPlateau:
    """Partial sums over the boxes of the schedule, from one term table."""
    marks = sorted(set(int(h) for h in schedule))
    shells, terms = _niederreiter_terms(alpha, forms, t, marks[-1], guard)
    rows = []
    previous = None
    for h in marks:
        total = math.fsum(terms[shells <= h])
        increment = float("nan") if previous is None else (total - previous) / previous
        rows.append((h, total, increment))
        previous = total
    return NiederreiterPlateau(
        t=t, forms=tuple(tuple(int(v) for v in f) for f in forms), rows=rows
    )


def coboundary_solve(
    spectrum: FourierSpectrum,
    alpha: RotationVector,
    h_max: int | None = None,
    guard: float = 1e-15,
    grid: int = 10_000,
    evaluator: Callable[[np.ndarray], np.ndarray] | None = None,
) -> CoboundaryResult:
    """Solve ψ(x + α) − ψ(x) = φ(x) on T¹ by c_n(ψ) = c_n(φ)/(e^{2πinα} − 1).

    Args:
        spectrum: One-dimensional spectrum of a centered φ
        alpha: Rotation of T¹
        h_max: Truncation (defaults to the spectrum's box)
        guard: Smallest admissible ‖nα‖
        grid: Residual grid size
        evaluator: Exact φ on float arrays, for the residual against the map

    Raises:
        ResonanceError: If ‖nα‖ < guard for a retained n
    """
    if spectrum.dims != 1 or alpha.rho != 1:
        raise ValueError("Coboundary solving works on T¹")
    table = spectrum.lookup()
    if abs(table.get((0,), 0.0)) > 1e-12:
        raise ValueError("Spectrum must be centered (c_0 = 0)")
    bound = spectrum.h_max if h_max is None else h_max

    n_all = spectrum.index[:, 0]
    keep = (n_all != 0) & (np.abs(n_all) <= bound)
    index = spectrum.index[keep]
    c = spectrum.values[keep]
    phases = dot_phases(alpha, index)
    _guarded_norms(phases, index, guard)
    rotation = np.exp(2j * np.pi * unit_floats(phases))
    d = c / (rotation - 1.0)

    x = np.arange(grid) / grid
    residual = 0.0
    exact_residual = 0.0 if evaluator is not None else None
    n = index[:, 0].astype(np.float64)
    for start in range(0, grid, _GRID_CHUNK):
        xs = x[start : start + _GRID_CHUNK]
        waves = np.exp(2j * np.pi * np.outer(xs, n))
        phi_t = (waves @ c).real
        psi_x = waves @ d
        psi_shift = waves @ (d * rotation)
        image = (psi_shift - psi_x).real
        residual = max(residual, float(np.max(np.abs(phi_t - image))))
        if evaluator is not None:
            exact = np.asarray(evaluator(xs), dtype=np.float64).reshape(len(xs))
            exact_residual = max(exact_residual, float(np.max(np.abs(exact - image))))

    beyond = np.abs(n_all) > bound
    truncation = math.fsum(np.abs(spectrum.values[beyond]))
    psi = FourierSpectrum(
        dims=1,
        index=np.vstack([[[0]], index]),
        values=np.concatenate([[0.0], d]),
        h_max=bound,
        label=f"coboundary({spectrum.label})",
    )
    logger.debug(f"Coboundary residual {residual:.3g} with {len(d)} harmonics")
    return CoboundaryResult(
        psi=psi,
        h_max=bound,
        residual=residual,
        exact_residual=exact_residual,
        truncation_estimate=truncation,
        psi_l1=math.fsum(np.abs(d)),
        grid=grid,
    )


__all__ = [
    "box_index",
    "triangle_coeff",
    "triangle_coeff_quadrature",
    "triangle_spectrum",
    "sawtooth_spectrum",
    "quadratic_spectrum",
    "quadratic_tail_bound",
    "harmonic_spectrum",
    "spectrum_of_map",
    "map_coeff_quadrature",
    "decay_envelope",
    "decay_bound_check",
    "dot_phases",
    "l2_sum_growth",
    "niederreiter_sum",
    "niederreiter_plateau",
    "coboundary_solve",
]
