"""Trajectory metrics: implied learning rate, n1 and the relative-reward metric n2.

``n1`` is the episode-averaged mean square of the learning rate implied by
each recorded update; for a run with a fixed rate it recovers ``alpha**2``.
``n2`` is the episode-averaged mean relative reward
``R_t = (r_t - r_{t-1}) / r_t``, clamped into ``[0, 1]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .env import RunTrace, StepRecord
from .errors import NoValidSteps, TooShort

DENOM_EPS = 1e-9
# q_after - q_before carries ~1 ulp of |Q| rounding; below this relative TD
# error the recovered alpha is noise rather than signal
DENOM_REL_EPS = 1e-6
REWARD_EPS = 1e-12


def implied_alpha(step: StepRecord, gamma: float) -> Optional[float]:
    """Learning rate that maps ``q_before`` to ``q_after``, or ``None`` if undefined.

    The denominator is the TD error ``r + gamma * max_next_q - q_before``.
    Steps are skipped when it is below ``DENOM_EPS`` in magnitude, or below
    ``DENOM_REL_EPS`` relative to the Q values involved.
    """
    target = step.reward + gamma * step.max_next_q
    denom = target - step.q_before
    scale = max(abs(target), abs(step.q_before))
    if abs(denom) < max(DENOM_EPS, DENOM_REL_EPS * scale):
        return None
    return (step.q_after - step.q_before) / denom


def implied_alphas(run: RunTrace) -> tuple[list[list[float]], int]:
    """Per-episode implied alphas over non-skipped steps, plus the skip count."""
    per_episode, skipped = [], 0
    for ep in run.episodes:
        vals = []
        for step in ep.steps:
            a = implied_alpha(step, run.gamma)
            if a is None:
                skipped += 1
            else:
                vals.append(a)
        per_episode.append(vals)
    return per_episode, skipped


def n1_metric(run: RunTrace, gamma: Optional[float] = None) -> float:
    """Mean over episodes of the mean squared implied alpha.

    Episodes whose every step is skipped do not contribute; if that holds for
    the whole run :class:`NoValidSteps` is raised.
    """
    if gamma is not None and gamma != run.gamma:
        run = RunTrace(run.episodes, gamma, run.alphas)
    per_episode, _ = implied_alphas(run)
    means = [float(np.mean(np.square(v))) for v in per_episode if v]
    if not means:
        raise NoValidSteps("every step of every episode has a vanishing TD error")
    return float(np.mean(means))


@dataclass(frozen=True)
class RelativeRewardSeries:
    values: tuple
    skipped_count: int = 0
    clamped_count: int = 0

    def __len__(self) -> int:
        return len(self.values)

    def mean(self) -> float:
        if not self.values:
            raise NoValidSteps("all reward transitions were skipped")
        return float(np.mean(self.values))


def relative_rewards(raw: Sequence[float]) -> RelativeRewardSeries:
    """Relative reward change for every transition after the first reward.

    Transitions with ``r_t <= 1e-12`` are skipped; results outside ``[0, 1]``
    (falling rewards, or a negative predecessor) are clamped and counted.
    """
    raw = [float(r) for r in raw]
    if len(raw) < 2:
        raise TooShort(f"need at least 2 rewards, got {len(raw)}")
    values, skipped, clamped = [], 0, 0
    for prev, cur in zip(raw, raw[1:]):
        if cur <= REWARD_EPS:
            skipped += 1
            continue
        rt = (cur - prev) / cur
        if rt < 0.0 or rt > 1.0:
            clamped += 1
            rt = min(max(rt, 0.0), 1.0)
        values.append(rt)
    return RelativeRewardSeries(tuple(values), skipped, clamped)


def n2_metric(episodes: Iterable[Sequence[float]]) -> float:
    """Mean over episodes of each episode's mean relative reward."""
    means = [relative_rewards(r).mean() for r in episodes]
    if not means:
        raise TooShort("no episodes given")
    return float(np.mean(means))


def n2_lenient(episodes: Iterable[Sequence[float]]) -> tuple[Optional[float], int]:
    """Like :func:`n2_metric` but drops unusable episodes instead of raising.

    Returns ``(n2 or None, number of dropped episodes)``.
    """
    means, dropped = [], 0
    for r in episodes:
        if len(r) < 2:
            dropped += 1
            continue
        series = relative_rewards(r)
        if not series.values:
            dropped += 1
            continue
        means.append(series.mean())
    return (float(np.mean(means)) if means else None), dropped


def episode_mean_rt(rewards: Sequence[float]) -> Optional[float]:
    if len(rewards) < 2:
        return None
    series = relative_rewards(rewards)
    return series.mean() if series.values else None


@dataclass
class MetricReport:
    n1: float
    n2: Optional[float]
    implied_alphas: list = field(repr=False)
    skipped_steps: int = 0
    clamped_rewards: int = 0
    short_episodes: int = 0

    @property
    def implied_alpha_mean(self) -> float:
        return float(np.mean(self.implied_alphas)) if self.implied_alphas else float("nan")

    def to_dict(self) -> dict:
        return {
            "n1": self.n1,
            "n2": self.n2,
            "implied_alpha_mean": self.implied_alpha_mean,
            "skipped_steps": self.skipped_steps,
            "clamped_rewards": self.clamped_rewards,
            "short_episodes": self.short_episodes,
        }


def metric_report(run: RunTrace) -> MetricReport:
    per_episode, skipped = implied_alphas(run)
    n1 = n1_metric(run)
    n2, short = n2_lenient(run.rewards)
    clamped = sum(
        relative_rewards(r).clamped_count for r in run.rewards if len(r) >= 2
    )
    flat = [a for ep in per_episode for a in ep]
    return MetricReport(n1, n2, flat, skipped, clamped, short)
