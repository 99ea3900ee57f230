"""Equilibrium learning-rate tuning for tabular Q-learning.

The learning rate is chosen where the mean squared implied learning rate of
a run equals its mean relative reward, giving ``alpha = sqrt(n2)``.
"""

__version__ = "0.1.0"

from .env import EnvSpec, QTable, RunTrace, chain, geometric_chain, gridworld, q_update, run_training
from .metrics import MetricReport, metric_report, n1_metric, n2_metric, relative_rewards
from .tuner import AlphaSchedule, NashEstimate, adaptive_alpha, epsilon_nash_search, nash_alpha

__all__ = [
    "AlphaSchedule",
    "EnvSpec",
    "MetricReport",
    "NashEstimate",
    "QTable",
    "RunTrace",
    "adaptive_alpha",
    "chain",
    "epsilon_nash_search",
    "geometric_chain",
    "gridworld",
    "metric_report",
    "n1_metric",
    "n2_metric",
    "nash_alpha",
    "q_update",
    "relative_rewards",
    "run_training",
]
