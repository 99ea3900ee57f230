"""Normalisation of episode times and the angular-bisector construction."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateRange, DomainError, NotSorted, ZeroVector


@dataclass(frozen=True)
class NormalizedTimes:
    values: tuple
    source_min: float
    source_max: float
    source: tuple = ()


def normalize_times(times: Sequence[float]) -> NormalizedTimes:
    """Affine map of a strictly increasing sequence onto ``[0, 1]``."""
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise DegenerateRange("need at least two time points")
    lo, hi = float(t[0]), float(t[-1])
    if hi == lo:
        raise DegenerateRange(f"first and last time are both {lo}")
    if np.any(np.diff(t) <= 0):
        raise NotSorted("times must be strictly increasing")
    vals = (t - lo) / (hi - lo)
    vals[0], vals[-1] = 0.0, 1.0
    return NormalizedTimes(tuple(float(v) for v in vals), lo, hi, tuple(float(x) for x in t))


def density_gap(normed: NormalizedTimes) -> float:
    """Largest spacing between consecutive normalised points.

    Uses the source spacing over the source range when available, which
    avoids differencing already-rounded normalised values.
    """
    if normed.source:
        gaps = np.diff(normed.source)
        return float(np.max(gaps)) / (normed.source_max - normed.source_min)
    return float(np.max(np.diff(normed.values)))


def _vec(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    norm = float(np.linalg.norm(arr))
    if norm == 0.0:
        raise ZeroVector(f"{name} is the zero vector")
    return arr


def angular_bisector(t_vec, r_vec) -> np.ndarray:
    """Unit vector along the internal bisector of ``t_vec`` and ``r_vec``."""
    t, r = _vec(t_vec, "T"), _vec(r_vec, "R")
    if t.shape != r.shape:
        raise ValueError(f"dimension mismatch: {t.shape} vs {r.shape}")
    m = t / np.linalg.norm(t) + r / np.linalg.norm(r)
    norm = np.linalg.norm(m)
    if norm == 0.0:
        raise ZeroVector("T and R are antiparallel; the internal bisector is undefined")
    return m / norm


def cos_sq_theta(t_vec, m_vec) -> float:
    t, m = _vec(t_vec, "T"), _vec(m_vec, "M")
    if t.shape != m.shape:
        raise ValueError(f"dimension mismatch: {t.shape} vs {m.shape}")
    c = float(np.dot(t, m)) ** 2 / (float(np.dot(t, t)) * float(np.dot(m, m)))
    return min(max(c, 0.0), 1.0)


def angle_between(u, v) -> float:
    """Angle in radians, computed with atan2 for accuracy near 0 and pi."""
    a, b = _vec(u, "u"), _vec(v, "v")
    a, b = a / np.linalg.norm(a), b / np.linalg.norm(b)
    return float(2.0 * math.atan2(np.linalg.norm(a - b), np.linalg.norm(a + b)))


def alpha_to_theta(alpha: float) -> float:
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must be in [0, 1], got {alpha}")
    return math.acos(alpha)


def theta_to_alpha(theta: float) -> float:
    if not 0.0 <= theta <= math.pi / 2:
        raise DomainError(f"theta must be in [0, pi/2], got {theta}")
    return math.cos(theta)


@dataclass
class BisectorGeometry:
    t_vec: np.ndarray
    r_vec: np.ndarray
    m_vec: np.ndarray
    cos_sq: float

    @classmethod
    def from_vectors(cls, t_vec, r_vec) -> "BisectorGeometry":
        t = np.asarray(t_vec, dtype=float)
        r = np.asarray(r_vec, dtype=float)
        m = angular_bisector(t, r)
        return cls(t, r, m, cos_sq_theta(t, m))

    @property
    def theta(self) -> float:
        return math.acos(math.sqrt(self.cos_sq))

    def to_dict(self) -> dict:
        return {
            "t_vec": self.t_vec.tolist(),
            "r_vec": self.r_vec.tolist(),
            "m_vec": self.m_vec.tolist(),
            "cos_sq": self.cos_sq,
            "theta": self.theta,
        }


def episode_vectors(lengths: Sequence[int], mean_rts: Sequence[float]) -> BisectorGeometry:
    """Geometry of a run: T holds episode lengths, R per-episode mean relative rewards."""
    return BisectorGeometry.from_vectors(lengths, mean_rts)
