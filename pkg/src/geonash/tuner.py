"""Equilibrium learning rate: closed form, grid search and an online schedule.

At equilibrium the exploration metric ``n1 = alpha**2`` equals the reward
metric ``n2``, so ``alpha* = sqrt(n2)``. :func:`epsilon_nash_search` finds the
grid point minimising ``|n1(alpha) - n2(alpha)|`` when both metrics come from
measurements rather than closed forms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .errors import ConfigError, DomainError, EmptyGrid
from .metrics import n2_lenient

DEFAULT_GRID_STEP = 0.005


def nash_alpha(n2_value: float) -> float:
    if not 0.0 <= n2_value <= 1.0:
        raise DomainError(f"n2 must be in [0, 1], got {n2_value}")
    return math.sqrt(n2_value)


def constant_reward_alpha(relative_reward: float) -> float:
    """Learning rate for a relative reward known to be constant."""
    if not 0.0 <= relative_reward <= 1.0:
        raise DomainError(f"relative reward must be in [0, 1], got {relative_reward}")
    return math.sqrt(relative_reward)


def alpha_grid(step: float = DEFAULT_GRID_STEP) -> list[float]:
    """Points ``k / m`` covering ``[0, 1]`` with ``m = round(1 / step)``.

    Built from integer ratios so halving the step yields a superset of points.
    """
    if not 0.0 < step <= 1.0:
        raise DomainError(f"grid step must be in (0, 1], got {step}")
    m = round(1.0 / step)
    if not math.isclose(m * step, 1.0, rel_tol=1e-9):
        raise DomainError(f"grid step {step} does not divide [0, 1] evenly")
    return [k / m for k in range(m + 1)]


@dataclass
class NashEstimate:
    alpha_star: float
    epsilon: float
    n1_at_star: float
    n2_at_star: float
    grid_step: Optional[float] = None
    evaluations: list = field(default_factory=list, repr=False)  # (alpha, n1, n2, gap)

    def to_dict(self) -> dict:
        return {
            "alpha_star": self.alpha_star,
            "epsilon": self.epsilon,
            "n1": self.n1_at_star,
            "n2": self.n2_at_star,
            "grid_step": self.grid_step,
        }


def epsilon_nash_search(
    n1_fn: Callable[[float], float],
    n2_fn: Callable[[float], float],
    grid: Sequence[float],
    grid_step: Optional[float] = None,
) -> NashEstimate:
    """Scan one shared alpha over ``grid`` and return the smallest-gap point.

    Every grid point is evaluated before selecting, and ties go to the smaller
    alpha, so the answer does not depend on evaluation order.
    """
    grid = [float(a) for a in grid]
    if not grid:
        raise EmptyGrid("alpha grid is empty")
    for a in grid:
        if not 0.0 <= a <= 1.0:
            raise DomainError(f"grid value {a} outside [0, 1]")
    rows = []
    for a in sorted(set(grid)):
        n1, n2 = float(n1_fn(a)), float(n2_fn(a))
        rows.append((a, n1, n2, abs(n1 - n2)))
    best = min(rows, key=lambda r: (r[3], r[0]))
    return NashEstimate(best[0], best[3], best[1], best[2], grid_step, rows)


@dataclass(frozen=True)
class AlphaSchedule:
    """Online schedule: each episode uses ``sqrt(n2)`` of recent episodes.

    ``window=None`` accumulates over every completed episode.
    """

    alpha_0: float = 0.5
    alpha_min: float = 0.0
    alpha_max: float = 1.0
    window: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.alpha_min <= self.alpha_max <= 1.0:
            raise ConfigError(
                f"need 0 <= alpha_min <= alpha_max <= 1, got {self.alpha_min}, {self.alpha_max}"
            )
        if not 0.0 <= self.alpha_0 <= 1.0:
            raise ConfigError(f"alpha_0 must be in [0, 1], got {self.alpha_0}")
        if self.window is not None and self.window < 1:
            raise ConfigError("window must be a positive episode count")


def adaptive_alpha(schedule: AlphaSchedule, history: Iterable[Sequence[float]]) -> float:
    """Learning rate for the next episode given reward sequences of past ones.

    Episodes too short to yield a relative reward are ignored; with nothing
    usable the schedule's ``alpha_0`` is returned unclamped.
    """
    history = list(history)
    if schedule.window is not None:
        history = history[-schedule.window:]
    n2, _ = n2_lenient(history)
    if n2 is None:
        return schedule.alpha_0
    return min(max(math.sqrt(n2), schedule.alpha_min), schedule.alpha_max)
