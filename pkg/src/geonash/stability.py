"""Stability bounds on the shifted Cauchy-Schwarz ratio.

Shifting the normalised time ``u`` in ``[0, 1]`` by ``x`` gives the ratio

    ratio(x) = 3/4 * (1 - 4x + 4x^2) / (1 + 3x + 3x^2)

which equals 3/4 at ``x = 0``. The stable regime is the open set of ``x``
with ``1/2 < ratio(x) < 3/4``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DomainError, EmptyVector

NASH_RATIO = 0.5
UPPER_RATIO = 0.75


def lhs_ratio(x: float) -> float:
    # 1 + 3x + 3x^2 has negative discriminant, so it is positive for all real x
    return 0.75 * (1.0 - 4.0 * x + 4.0 * x * x) / (1.0 + 3.0 * x + 3.0 * x * x)


def lhs_ratio_derivative(x: float) -> float:
    """Analytic derivative; the quotient-rule numerator reduces to ``24x^2 + 2x - 7``."""
    den = 1.0 + 3.0 * x + 3.0 * x * x
    return 0.75 * (24.0 * x * x + 2.0 * x - 7.0) / (den * den)


def quadratic_roots(a: float, b: float, c: float) -> tuple[float, float]:
    """Real roots of ``a x^2 + b x + c`` in ascending order, cancellation-free."""
    disc = b * b - 4.0 * a * c
    if disc < 0:
        raise DomainError("quadratic has no real roots")
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    r1, r2 = q / a, c / q
    return (min(r1, r2), max(r1, r2))


def critical_points() -> list[tuple[float, float]]:
    """Stationary points of :func:`lhs_ratio` as ``(x, ratio)`` pairs."""
    return [(x, lhs_ratio(x)) for x in quadratic_roots(24.0, 2.0, -7.0)]


def ratio_half_roots() -> tuple[float, float]:
    # 3(1 - 4x + 4x^2) = 2(1 + 3x + 3x^2)  <=>  6x^2 - 18x + 1 = 0
    return quadratic_roots(6.0, -18.0, 1.0)


def ratio_upper_roots() -> tuple[float, float]:
    # 1 - 4x + 4x^2 = 1 + 3x + 3x^2  <=>  x(x - 7) = 0
    return (0.0, 7.0)


def stable_intervals() -> list[tuple[float, float]]:
    lo_half, hi_half = ratio_half_roots()
    zero, seven = ratio_upper_roots()
    return [(zero, lo_half), (hi_half, seven)]


def bisect(fn: Callable[[float], float], lo: float, hi: float, tol: float = 1e-14, max_iter: int = 200) -> float:
    """Plain bisection on a sign-changing bracket."""
    f_lo, f_hi = fn(lo), fn(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if (f_lo > 0) == (f_hi > 0):
        raise DomainError(f"no sign change on [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = fn(mid)
        if f_mid == 0.0 or hi - lo < tol:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bisection_endpoints() -> list[float]:
    """Interval endpoints located numerically, independent of the closed forms."""
    half = lambda x: lhs_ratio(x) - NASH_RATIO
    upper = lambda x: lhs_ratio(x) - UPPER_RATIO
    return [
        bisect(upper, -0.5, 0.25),
        bisect(half, 0.0, 0.5),
        bisect(half, 0.5, 5.0),
        bisect(upper, 5.0, 10.0),
    ]


def cauchy_schwarz_ratio(t_vec: Sequence[float]) -> float:
    """``(sum T)^2 / (N * sum T^2)``, at most 1 with equality iff all entries match."""
    t = np.asarray(t_vec, dtype=float)
    if t.size == 0:
        raise EmptyVector("Cauchy-Schwarz ratio of an empty vector")
    sq = float(np.dot(t, t))
    if sq == 0.0:
        raise DomainError("vector must have a nonzero entry")
    return float(math.fsum(t)) ** 2 / (t.size * sq)


def ratio_to_alpha(ratio: float) -> tuple[float, float]:
    """Learning rate and its angle (radians) for a squared-cosine ratio."""
    if not 0.0 <= ratio <= 1.0:
        raise DomainError(f"ratio must be in [0, 1], got {ratio}")
    alpha = math.sqrt(ratio)
    return alpha, math.acos(min(alpha, 1.0))


@dataclass
class StabilityReport:
    samples: list  # (x, ratio)
    critical_points: list
    stable_intervals: list
    alpha_bounds: tuple = (math.sqrt(NASH_RATIO), math.sqrt(UPPER_RATIO))
    bisection_check: list = field(default_factory=list)

    def to_dict(self) -> dict:
        intervals = []
        for lo, hi in self.stable_intervals:
            # the shift x is only admissible while |u - x| stays inside [0, 1]
            intervals.append({"lo": lo, "hi": hi, "open": True, "within_premise": hi <= 1.0})
        return {
            "critical_points": [{"x": x, "ratio": r} for x, r in self.critical_points],
            "stable_intervals": intervals,
            "alpha_bounds": {"lower": self.alpha_bounds[0], "upper": self.alpha_bounds[1]},
            "theta_bounds_deg": {
                "lower": math.degrees(math.acos(self.alpha_bounds[1])),
                "upper": math.degrees(math.acos(self.alpha_bounds[0])),
            },
            "ratio_at_zero": lhs_ratio(0.0),
            "bisection_endpoints": self.bisection_check,
        }


def stability_report(xs: Iterable[float]) -> StabilityReport:
    xs = sorted(set(float(x) for x in xs))
    return StabilityReport(
        samples=[(x, lhs_ratio(x)) for x in xs],
        critical_points=critical_points(),
        stable_intervals=stable_intervals(),
        bisection_check=bisection_endpoints(),
    )


def in_stable_region(x: float) -> bool:
    return NASH_RATIO < lhs_ratio(x) < UPPER_RATIO
