"""Continued fractions, Ostrowski numeration and approximation margins.

Quadratic surds expand exactly through their (P, Q) state under the Gauss
map. Other reals expand through an interval [v - ε, v + ε] carried as exact
rationals, so a quotient is only accepted once both ends agree on it.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Any

import numpy as np
from mpmath import mp, mpf

from ..utils.exceptions import DepthError, PrecisionError, RationalInputError
from ..utils.logging import get_logger
from ..utils.precision import (
    DEFAULT_PRECISION_BITS,
    PhaseKernel,
    dist_to_z,
    fixed_point,
    frac,
    to_mpf,
)
from .models import (
    BadMargin,
    ContinuedFraction,
    ConvergentTable,
    OstrowskiDigits,
    SeriesPlateau,
    SourceKind,
    TypeProbeReport,
)
from .values import QuadraticSurd, describe, is_decimal_literal, parse_value

logger = get_logger(__name__)

__all__ = [
    "expand_cf",
    "convergents",
    "convergent_bound_check",
    "ostrowski",
    "dist_to_z",
    "bad_margin",
    "type_probe",
    "series_partial_sum",
    "series_plateau",
]

_SCAN_CHUNK = 1 << 16
_ORBIT_CHUNK = 1 << 18


def _mpf_to_fraction(value: Any) -> Fraction:
    man, exp = mpf(value).man_exp
    return Fraction(int(man)) * Fraction(2) ** int(exp)


def _surd_state(surd: QuadraticSurd) -> tuple[int, int, int]:
    """Write the surd as (P + √d)/Q with Q dividing d - P²."""
    if surd.b > 0:
        P, Q, d = surd.a, surd.c, surd.b * surd.b * surd.D
    else:
        P, Q, d = -surd.a, -surd.c, surd.b * surd.b * surd.D
    if (d - P * P) % Q != 0:
        P, d, Q = P * abs(Q), d * Q * Q, Q * abs(Q)
    return P, Q, d


def _state_floor(P: int, Q: int, root: int) -> int:
    if Q > 0:
        return (P + root) // Q
    return (-P - root - 1) // (-Q)


def _expand_surd(
    surd: QuadraticSurd, depth: int
) -> tuple[list[int], int | None, int | None]:
    P, Q, d = _surd_state(surd)
    root = math.isqrt(d)
    a0 = _state_floor(P, Q, root)
    P -= a0 * Q
    quotients: list[int] = []
    seen: dict[tuple[int, int], int] = {}
    preperiod = period = None
    while len(quotients) < depth:
        P, Q = -P, (d - P * P) // Q
        if period is None:
            if (P, Q) in seen:
                preperiod = seen[(P, Q)]
                period = len(quotients) - preperiod
            else:
                seen[(P, Q)] = len(quotients)
        a = _state_floor(P, Q, root)
        quotients.append(a)
        P -= a * Q
    return quotients, preperiod, period


def _rational_expansion(value: Fraction) -> list[int]:
    quotients = []
    rest = value - math.floor(value)
    while rest != 0:
        inverse = 1 / rest
        a = math.floor(inverse)
        quotients.append(a)
        rest = inverse - a
    return quotients


def expand_cf(
    x: Any, depth: int, precision_bits: int = DEFAULT_PRECISION_BITS
) -> ContinuedFraction:
    """Expand x mod 1 into partial quotients a_1 … a_depth.

    Args:
        x: Text, number, Fraction, QuadraticSurd or mpmath real
        depth: Number of quotients wanted (≥ 1)
        precision_bits: Working precision for non-surd inputs

    Returns:
        The expansion; ``precision_exhausted`` is set when fewer than
        ``depth`` quotients could be certified.

    Raises:
        RationalInputError: If x is rational (or suspected rational)
    """
    if depth < 1:
        raise ValueError("Depth must be at least 1")
    text = x if isinstance(x, str) else None
    value = parse_value(x, precision_bits)

    if isinstance(value, Fraction):
        quotients = _rational_expansion(value)
        raise RationalInputError(
            f"Rational input {value}: expansion terminates after "
            f"{len(quotients)} quotients {tuple(quotients)}",
            suspected=False,
        )

    with mp.workprec(precision_bits):
        if isinstance(value, QuadraticSurd):
            integer_part = math.floor(value)
            quotients, preperiod, period = _expand_surd(value, depth)
            return ContinuedFraction(
                value=frac(value),
                quotients=tuple(quotients),
                source=SourceKind.SURD,
                integer_part=integer_part,
                precision_bits=precision_bits,
                preperiod=preperiod,
                period=period,
                origin=value,
            )

        real = to_mpf(value)
        integer_part = int(mp.floor(real))
        reduced = real - integer_part
        quotients, exhausted = _expand_continued(reduced, depth, precision_bits)
        if exhausted:
            logger.warning(
                f"Precision exhausted after {len(quotients)} of {depth} quotients"
            )
        kind = (
            SourceKind.DECIMAL
            if text is None or is_decimal_literal(text)
            else SourceKind.EXPRESSION
        )
        return ContinuedFraction(
            value=reduced,
            quotients=tuple(quotients),
            source=kind,
            integer_part=integer_part,
            precision_bits=precision_bits,
            precision_exhausted=exhausted,
            origin=value,
        )


def _expand_continued(
    reduced: Any, depth: int, precision_bits: int
) -> tuple[list[int], bool]:
    """Lockstep Gauss map on the ends of the uncertainty interval."""
    center = _mpf_to_fraction(reduced)
    radius = Fraction(1, 2 ** (precision_bits - 8))
    suspicion = Fraction(1, 2 ** (precision_bits // 2))
    lo, hi = center - radius, center + radius
    quotients: list[int] = []
    while len(quotients) < depth:
        if hi <= suspicion or lo <= suspicion:
            raise RationalInputError(
                f"Gauss-map iterate below 2^-{precision_bits // 2} after "
                f"{len(quotients)} quotients",
                suspected=True,
            )
        lo, hi = 1 / hi, 1 / lo
        a_lo, a_hi = math.floor(lo), math.floor(hi)
        if a_lo != a_hi:
            nearest = round((lo + hi) / 2)
            if abs((lo + hi) / 2 - nearest) <= suspicion * 4:
                raise RationalInputError(
                    f"Expansion terminates after {len(quotients) + 1} quotients "
                    "at working precision",
                    suspected=True,
                )
            return quotients, True
        quotients.append(a_lo)
        lo, hi = lo - a_lo, hi - a_lo
    return quotients, False


def convergents(cf: ContinuedFraction, depth: int) -> ConvergentTable:
    """Denominators q_0 … q_{max(depth,2)-1} with the inequality chain checked.

    Raises:
        DepthError: If cf holds too few quotients
        PrecisionError: If q_{n+1}‖q_nα‖ leaves [1/2, 1] at working precision
    """
    if depth < 1:
        raise ValueError("Depth must be at least 1")
    size = max(depth, 2)
    if cf.depth < size - 1:
        raise DepthError(
            f"Need {size - 1} quotients for {size} denominators, have {cf.depth}"
        )
    q = [1, cf.quotients[0]]
    p = [0, 1]
    for n in range(2, size):
        a = cf.quotients[n - 1]
        q.append(a * q[-1] + q[-2])
        p.append(a * p[-1] + p[-2])

    chain: list[float] = []
    with mp.workprec(cf.precision_bits):
        alpha = cf.value
        for n in range(size - 1):
            product = q[n + 1] * dist_to_z(q[n] * alpha)
            chain.append(float(product))
            exempt = n == 0 and q[0] == q[1]
            if product > 1 or (product < mpf(1) / 2 and not exempt):
                raise PrecisionError(
                    f"q_{n + 1}·‖q_{n}α‖ = {mp.nstr(product, 10)} outside [1/2, 1]"
                )
    return ConvergentTable(
        q=tuple(q), p=tuple(p), quotients=cf.quotients, chain=tuple(chain), expansion=cf
    )


def convergent_bound_check(table: ConvergentTable) -> float:
    """Largest q_n·q_{n+1}·|α − p_n/q_n|; must stay below 1.

    Raises:
        PrecisionError: If the classical convergent bound fails
    """
    cf: ContinuedFraction = table.expansion
    worst = 0.0
    with mp.workprec(cf.precision_bits):
        for n in range(table.depth - 1):
            error = abs(cf.value - mpf(table.p[n]) / table.q[n])
            scaled = error * table.q[n] * table.q[n + 1]
            if scaled >= 1:
                raise PrecisionError(f"|α - p_{n}/q_{n}| violates 1/(q_n q_(n+1))")
            worst = max(worst, float(scaled))
    return worst


def ostrowski(n: int, table: ConvergentTable) -> OstrowskiDigits:
    """Greedy Ostrowski digits of n, largest denominator first.

    Raises:
        DepthError: If the table does not reach past n
    """
    if n < 1:
        raise ValueError("Ostrowski digits need n >= 1")
    if table.q[-1] <= n:
        raise DepthError(f"Convergent table ends at q={table.q[-1]} <= n={n}")
    m = max(k for k, qk in enumerate(table.q) if qk <= n)
    digits = [0] * (m + 1)
    rest = n
    for k in range(m, 0, -1):
        digits[k], rest = divmod(rest, table.q[k])
    digits[0] = rest
    canonical = all(
        not (digits[k] == table.quotients[k] and digits[k - 1] != 0)
        for k in range(1, m + 1)
    )
    return OstrowskiDigits(n=n, digits=tuple(digits), canonical=canonical, base=table)


def _scan_chunk(
    theta_fixed: int, x_fixed: int, bits: int, lo: int, hi: int
) -> tuple[int, int]:
    """Best (|q|·d, q) over lo ≤ |q| ≤ hi for fixed-point θ and x."""
    modulus = 1 << bits
    half = modulus >> 1
    best_value = -1
    best_q = 0
    residue = (lo * theta_fixed) % modulus
    for q in range(lo, hi + 1):
        for signed, r in ((q, residue), (-q, modulus - residue)):
            d = (r - x_fixed) % modulus
            if d > half:
                d = modulus - d
            score = q * d
            if best_value < 0 or score < best_value:
                best_value, best_q = score, signed
        residue += theta_fixed
        if residue >= modulus:
            residue -= modulus
    return best_value, best_q


def bad_margin(
    theta: Any,
    x: Any = 0,
    q_max: int = 10_000,
    q_min: int = 1,
    precision_bits: int = DEFAULT_PRECISION_BITS,
    workers: int = 1,
) -> BadMargin:
    """Brute-force min |q|·‖qθ − x‖ over q_min ≤ |q| ≤ q_max.

    Ties go to the smaller |q|, then to the positive q.
    """
    if q_max < 1 or q_min < 1 or q_min > q_max:
        raise ValueError("Need 1 <= q_min <= q_max")
    with mp.workprec(precision_bits + 64):
        theta_value = parse_value(theta, precision_bits)
        x_value = parse_value(x, precision_bits)
        theta_fixed = fixed_point(theta_value, precision_bits)
        x_fixed = fixed_point(x_value, precision_bits)

    bounds = [
        (lo, min(lo + _SCAN_CHUNK - 1, q_max))
        for lo in range(q_min, q_max + 1, _SCAN_CHUNK)
    ]
    args = [(theta_fixed, x_fixed, precision_bits, lo, hi) for lo, hi in bounds]
    if workers > 1 and len(bounds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_scan_chunk, *zip(*args, strict=True)))
    else:
        results = [_scan_chunk(*a) for a in args]

    best_value, best_q = results[0]
    for value, q in results[1:]:
        if value < best_value:
            best_value, best_q = value, q

    with mp.workprec(precision_bits + 64):
        margin = float(mpf(best_value) / mpf(2) ** precision_bits)
    certified = precision_bits - math.ceil(math.log2(q_max + 1))
    logger.debug(f"bad_margin over |q| <= {q_max}: {margin:.6g} at q={best_q}")
    return BadMargin(
        theta=str(describe(theta_value)),
        x=str(describe(x_value)),
        q_min=q_min,
        q_max=q_max,
        margin=margin,
        argmin_q=best_q,
        certified_bits=certified,
    )


def _norm_chunks(alpha: Any, K: int, precision_bits: int):
    """Yield (k, ‖kα‖) for k = 1..K in chunks."""
    with mp.workprec(precision_bits):
        kernel = PhaseKernel(parse_value(alpha, precision_bits))
    for start in range(1, K + 1, _ORBIT_CHUNK):
        k = np.arange(start, min(start + _ORBIT_CHUNK, K + 1), dtype=np.int64)
        yield k, kernel.norms(k)


def type_probe(
    alpha: Any,
    epsilon: float,
    q_max: int,
    eta: float = 1.0,
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> TypeProbeReport:
    """Finite-scan evidence for the Diophantine type at a candidate η.

    Reports min k^{η-ε}‖kα‖ and min k^{η+ε}‖kα‖ over k ≤ q_max, with the
    running minima at powers of ten. Never conclusive.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if q_max < 1:
        raise ValueError("q_max must be at least 1")
    best_low = best_high = math.inf
    arg_low = arg_high = 1
    checkpoints: list[dict[str, float]] = []
    marks = [10**j for j in range(1, 20) if 10**j < q_max] + [q_max]
    for k, norms in _norm_chunks(alpha, q_max, precision_bits):
        kf = k.astype(np.float64)
        low = kf ** (eta - epsilon) * norms
        high = kf ** (eta + epsilon) * norms
        for mark in marks:
            if k[0] <= mark <= k[-1]:
                upto = mark - int(k[0]) + 1
                i_low = int(np.argmin(low[:upto]))
                i_high = int(np.argmin(high[:upto]))
                cand_low = min(best_low, float(low[i_low]))
                cand_high = min(best_high, float(high[i_high]))
                checkpoints.append(
                    {"k": mark, "inf_low": cand_low, "inf_high": cand_high}
                )
        i_low = int(np.argmin(low))
        i_high = int(np.argmin(high))
        if low[i_low] < best_low:
            best_low, arg_low = float(low[i_low]), int(k[i_low])
        if high[i_high] < best_high:
            best_high, arg_high = float(high[i_high]), int(k[i_high])
    return TypeProbeReport(
        eta=eta,
        epsilon=epsilon,
        q_max=q_max,
        inf_low=best_low,
        inf_high=best_high,
        argmin_low=arg_low,
        argmin_high=arg_high,
        checkpoints=checkpoints,
    )


def series_plateau(
    alpha: Any,
    eta: float,
    delta: float,
    schedule: list[int],
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> SeriesPlateau:
    """Partial sums Σ_{k≤K} 1/(k^{η+δ}‖kα‖) at every K of the schedule."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    marks = sorted(set(schedule))
    if not marks or marks[0] < 1:
        raise ValueError("Schedule entries must be >= 1")
    partials: list[float] = []
    rows: list[tuple[int, float, float]] = []
    mark_iter = iter(marks)
    mark = next(mark_iter, None)
    for k, norms in _norm_chunks(alpha, marks[-1], precision_bits):
        terms = 1.0 / (k.astype(np.float64) ** (eta + delta) * norms)
        start = 0
        while mark is not None and mark <= k[-1]:
            stop = mark - int(k[0]) + 1
            partials.append(math.fsum(terms[start:stop]))
            start = stop
            total = math.fsum(partials)
            previous = rows[-1][1] if rows else 0.0
            rows.append((mark, total, total - previous))
            mark = next(mark_iter, None)
        if start < len(terms):
            partials.append(math.fsum(terms[start:]))
    return SeriesPlateau(eta=eta, delta=delta, rows=rows)


def series_partial_sum(
    alpha: Any,
    eta: float,
    delta: float,
    K: int,
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> float:
    """Σ_{k=1..K} 1/(k^{η+δ}‖kα‖)."""
    if K < 1:
        raise ValueError("K must be at least 1")
    return series_plateau(alpha, eta, delta, [K], precision_bits).rows[-1][1]
