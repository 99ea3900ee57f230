"""Seeded Monte Carlo sweeps of the equilibrium learning rate over episode counts.

For every episode count ``N`` in a log-spaced set, each of the ``N`` episodes
gets a length ``T_i`` drawn uniformly from ``1..t_max`` and ``T_i`` relative
rewards from the configured reward model. The cell's ``mean_rt`` is the mean
over episodes of the per-episode means and its learning rate is
``sqrt(mean_rt)``.
"""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .env import EnvSpec, run_training
from .errors import ConfigError, EmptyInput
from .metrics import n2_lenient
from .output import fmt

log = logging.getLogger(__name__)

UNIFORM = "uniform01"
CONSTANT = "constant"
FROM_ENV = "env"
SQRT_HALF = math.sqrt(0.5)


@dataclass(frozen=True)
class RewardModel:
    kind: str = UNIFORM
    value: float = 0.0

    @classmethod
    def parse(cls, text: str) -> "RewardModel":
        """Parse ``uniform01``, ``constant:<c>`` or ``env``."""
        text = text.strip()
        if text == UNIFORM:
            return cls(UNIFORM)
        if text == FROM_ENV:
            return cls(FROM_ENV)
        if text.startswith(CONSTANT + ":"):
            try:
                c = float(text.split(":", 1)[1])
            except ValueError:
                raise ConfigError(f"bad constant reward model {text!r}") from None
            if not 0.0 <= c <= 1.0:
                raise ConfigError(f"constant reward must be in [0, 1], got {c}")
            return cls(CONSTANT, c)
        raise ConfigError(f"unknown reward model {text!r}")

    def __str__(self) -> str:
        return f"{CONSTANT}:{self.value!r}" if self.kind == CONSTANT else self.kind


@dataclass(frozen=True)
class SweepConfig:
    n_min: int = 1
    n_max: int = 10
    n_samples: int = 10
    t_max: int = 5
    reward_model: RewardModel = field(default_factory=RewardModel)
    seed: int = 0
    # only used by the env reward model
    env: Optional[EnvSpec] = None
    env_alpha: float = 0.5
    env_gamma: float = 0.9
    env_explore: float = 0.1

    def __post_init__(self):
        if self.n_min < 1 or self.n_max < self.n_min:
            raise ConfigError(f"need 1 <= n_min <= n_max, got {self.n_min}, {self.n_max}")
        if self.n_samples < 1:
            raise ConfigError("n_samples must be >= 1")
        if self.t_max < 1:
            raise ConfigError("t_max must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.reward_model.kind == FROM_ENV and self.env is None:
            raise ConfigError("the env reward model needs an environment spec")


@dataclass(frozen=True)
class SweepCell:
    n: int
    t_i: int  # median episode length in the cell (lower-middle)
    alpha: float
    mean_rt: float


@dataclass(frozen=True)
class SweepSummary:
    max_cell: SweepCell
    min_cell: SweepCell
    median_cell: SweepCell

    def to_dict(self) -> dict:
        return {
            "max": asdict(self.max_cell),
            "min": asdict(self.min_cell),
            "median": asdict(self.median_cell),
        }


def log_spaced_counts(n_min: int, n_max: int, n_samples: int) -> list[int]:
    if n_samples == 1 or n_min == n_max:
        raw = [n_min] if n_samples == 1 else [n_min, n_max]
    else:
        raw = np.rint(np.logspace(math.log10(n_min), math.log10(n_max), n_samples))
    return sorted({int(n) for n in raw})


def _cell_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _lower_median(values) -> int:
    s = np.sort(np.asarray(values))
    return int(s[(len(s) - 1) // 2])


def _run_cell(config: SweepConfig, index: int, n: int) -> SweepCell:
    rng = _cell_rng(config.seed, index)
    model = config.reward_model
    if model.kind == FROM_ENV:
        run = run_training(
            config.env, n, config.env_alpha, config.env_gamma, config.env_explore,
            seed=int(rng.integers(2**63)),
        )
        mean_rt, _ = n2_lenient(run.rewards)
        if mean_rt is None:
            raise ConfigError("environment produced no episode with a usable relative reward")
        t_i = _lower_median(run.lengths)
    else:
        lengths = rng.integers(1, config.t_max + 1, size=n)
        if model.kind == CONSTANT:
            mean_rt = model.value
        else:
            draws = rng.random(int(lengths.sum()))
            starts = np.concatenate(([0], np.cumsum(lengths)[:-1]))
            per_episode = np.add.reduceat(draws, starts) / lengths
            mean_rt = float(per_episode.mean())
        t_i = _lower_median(lengths)
    mean_rt = min(max(float(mean_rt), 0.0), 1.0)
    return SweepCell(n, t_i, math.sqrt(mean_rt), mean_rt)


def generate_sweep(config: SweepConfig, workers: int = 1) -> list[SweepCell]:
    """Evaluate every log-spaced N; output is identical for any ``workers``."""
    counts = log_spaced_counts(config.n_min, config.n_max, config.n_samples)
    log.debug("sweep over %d episode counts: %s", len(counts), counts)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_cell, config, i, n) for i, n in enumerate(counts)]
            return [f.result() for f in futures]
    return [_run_cell(config, i, n) for i, n in enumerate(counts)]


def summarize(cells: Sequence[SweepCell]) -> SweepSummary:
    """Cells with the largest, smallest and (lower) median ``mean_rt``.

    Ties are broken toward smaller N, then smaller T_i.
    """
    if not cells:
        raise EmptyInput("no sweep cells to summarize")
    ascending = sorted(cells, key=lambda c: (c.mean_rt, c.n, c.t_i))
    top = max(c.mean_rt for c in cells)
    max_cell = min((c for c in cells if c.mean_rt == top), key=lambda c: (c.n, c.t_i))
    return SweepSummary(max_cell, ascending[0], ascending[(len(ascending) - 1) // 2])


def spread(cells: Sequence[SweepCell]) -> float:
    if not cells:
        raise EmptyInput("no sweep cells")
    values = [c.mean_rt for c in cells]
    return max(values) - min(values)


def range_report(config: SweepConfig, cells: Sequence[SweepCell], band: float) -> dict:
    alphas = [c.alpha for c in cells]
    return {
        "n_min": config.n_min,
        "n_max": config.n_max,
        "reward_model": str(config.reward_model),
        "cells": len(cells),
        "spread": spread(cells),
        "mean_rt_median": summarize(cells).median_cell.mean_rt,
        "alpha_min": min(alphas),
        "alpha_max": max(alphas),
        "alpha_within_band": all(abs(a - SQRT_HALF) <= band for a in alphas),
        "env_driven": config.reward_model.kind == FROM_ENV,
    }


def convergence_report(
    configs: Sequence[SweepConfig],
    band: float = 0.005,
    sweeps: Optional[Sequence[Sequence[SweepCell]]] = None,
) -> dict:
    """Spread per N range and whether the largest range sits near ``sqrt(1/2)``.

    ``configs`` are ordered from small to large N. Precomputed ``sweeps`` may be
    passed to avoid rerunning them.
    """
    if not configs:
        raise EmptyInput("no sweep configurations")
    if sweeps is None:
        sweeps = [generate_sweep(c) for c in configs]
    ranges = [range_report(c, s, band) for c, s in zip(configs, sweeps)]
    spreads = [r["spread"] for r in ranges]
    return {
        "target_alpha": SQRT_HALF,
        "band": band,
        "ranges": ranges,
        "spread_decreasing": all(b < a for a, b in zip(spreads, spreads[1:])),
        "large_n_alpha_within_band": ranges[-1]["alpha_within_band"],
    }


CSV_HEADER = ["n", "t_i", "alpha", "mean_rt"]


def export_csv(cells: Sequence[SweepCell], path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for c in cells:
            w.writerow([c.n, c.t_i, fmt(c.alpha), fmt(c.mean_rt)])
    return path


def read_csv(path) -> list[SweepCell]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        SweepCell(int(r["n"]), int(r["t_i"]), float(r["alpha"]), float(r["mean_rt"]))
        for r in rows
    ]


def export_plot_data(cells: Sequence[SweepCell], out_dir) -> list[Path]:
    """Two-column ``x,y`` files for alpha-vs-N and mean_rt-vs-N curves."""
    out_dir = Path(out_dir)
    written = []
    for name, attr in (("alpha_vs_n.csv", "alpha"), ("mean_rt_vs_n.csv", "mean_rt")):
        p = out_dir / name
        with p.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", attr])
            for c in cells:
                w.writerow([c.n, fmt(getattr(c, attr))])
        written.append(p)
    return written
