"""Deterministic tabular environments and the Q-learning engine.

Two environment kinds are provided:

* ``chain``: states ``0 .. length-1`` on a line, start at 0, the last state
  terminal. Action 0 moves right, action 1 moves left (clipped at 0).
* ``gridworld``: ``width x height`` cells indexed ``y * width + x``, start at
  (0, 0), bottom-right terminal by default. Actions are right, down, left, up;
  moving into a wall leaves the agent in place.

Rewards are paid on entering a state: ``r_goal`` for terminal states and
``r_step`` otherwise, unless ``state_rewards`` gives an explicit per-state
table. Shipped defaults are strictly positive so relative rewards are defined.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ConfigError, DomainError, OutOfRange, SteppedTerminal

CHAIN = "chain"
GRIDWORLD = "gridworld"

RIGHT, LEFT = 0, 1
GRID_MOVES = ((1, 0), (0, 1), (-1, 0), (0, -1))  # right, down, left, up


@dataclass(frozen=True)
class EnvSpec:
    kind: str = CHAIN
    length: int = 5
    width: int = 3
    height: int = 3
    r_step: float = 1.0
    r_goal: float = 10.0
    terminals: Optional[tuple] = None
    start: int = 0
    max_steps: int = 1000
    state_rewards: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in (CHAIN, GRIDWORLD):
            raise ConfigError(f"unknown environment kind {self.kind!r}")
        if self.kind == CHAIN and self.length < 1:
            raise ConfigError("chain length must be >= 1")
        if self.kind == GRIDWORLD and (self.width < 1 or self.height < 1):
            raise ConfigError("gridworld width and height must be >= 1")
        if self.max_steps < 1:
            raise ConfigError("max_steps must be a positive integer")
        if not (math.isfinite(self.r_step) and math.isfinite(self.r_goal)):
            raise ConfigError("rewards must be finite")
        if not 0 <= self.start < self.n_states:
            raise ConfigError(f"start state {self.start} out of range")
        if self.terminals is not None:
            object.__setattr__(self, "terminals", tuple(int(s) for s in self.terminals))
            if not self.terminals:
                raise ConfigError("at least one terminal state is required")
            for s in self.terminals:
                if not 0 <= s < self.n_states:
                    raise ConfigError(f"terminal state {s} out of range")
        if self.state_rewards is not None:
            rewards = tuple(float(r) for r in self.state_rewards)
            if len(rewards) != self.n_states:
                raise ConfigError(
                    f"state_rewards needs {self.n_states} entries, got {len(rewards)}"
                )
            if not all(math.isfinite(r) for r in rewards):
                raise ConfigError("rewards must be finite")
            object.__setattr__(self, "state_rewards", rewards)

    @property
    def n_states(self) -> int:
        return self.length if self.kind == CHAIN else self.width * self.height

    @property
    def n_actions(self) -> int:
        return 2 if self.kind == CHAIN else 4

    @property
    def terminal_states(self) -> frozenset:
        if self.terminals is not None:
            return frozenset(self.terminals)
        return frozenset({self.n_states - 1})

    def is_terminal(self, state: int) -> bool:
        return state in self.terminal_states

    def reward_for(self, state: int) -> float:
        if self.state_rewards is not None:
            return self.state_rewards[state]
        return self.r_goal if self.is_terminal(state) else self.r_step


def chain(length: int = 5, **kwargs) -> EnvSpec:
    return EnvSpec(kind=CHAIN, length=length, **kwargs)


def gridworld(width: int = 3, height: int = 3, **kwargs) -> EnvSpec:
    return EnvSpec(kind=GRIDWORLD, width=width, height=height, **kwargs)


def geometric_chain(length: int, relative_reward: float, r_step: float = 1.0, **kwargs) -> EnvSpec:
    """Chain whose rewards grow so that every forward step has the same relative reward.

    Entering state ``k`` pays ``r_step / (1 - c) ** k``; consecutive forward
    rewards then satisfy ``(r_t - r_{t-1}) / r_t == c``.
    """
    if not 0.0 <= relative_reward < 1.0:
        raise ConfigError(f"relative_reward must be in [0, 1), got {relative_reward}")
    ratio = 1.0 / (1.0 - relative_reward)
    rewards = tuple(r_step * ratio**k for k in range(length))
    return EnvSpec(kind=CHAIN, length=length, r_step=r_step, state_rewards=rewards, **kwargs)


def env_reset(spec: EnvSpec) -> int:
    return spec.start


def env_step(spec: EnvSpec, state: int, action: int) -> tuple[int, float, bool]:
    """Apply ``action`` in ``state``; returns ``(next_state, reward, done)``."""
    if not 0 <= state < spec.n_states:
        raise OutOfRange(f"state {state} out of range [0, {spec.n_states})")
    if not 0 <= action < spec.n_actions:
        raise OutOfRange(f"action {action} out of range [0, {spec.n_actions})")
    if spec.is_terminal(state):
        raise SteppedTerminal(f"state {state} is terminal")

    if spec.kind == CHAIN:
        nxt = min(state + 1, spec.length - 1) if action == RIGHT else max(state - 1, 0)
    else:
        x, y = state % spec.width, state // spec.width
        dx, dy = GRID_MOVES[action]
        nx, ny = x + dx, y + dy
        if 0 <= nx < spec.width and 0 <= ny < spec.height:
            x, y = nx, ny
        nxt = y * spec.width + x
    return nxt, spec.reward_for(nxt), spec.is_terminal(nxt)


def _check_rates(alpha: float, gamma: float) -> None:
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must be in [0, 1], got {alpha}")
    if not 0.0 <= gamma < 1.0:
        raise DomainError(f"gamma must be in [0, 1), got {gamma}")


def q_update(q_sa: float, reward: float, gamma: float, max_next_q: float, alpha: float) -> float:
    """One tabular Bellman update of a single Q entry."""
    _check_rates(alpha, gamma)
    return (1.0 - alpha) * q_sa + alpha * (reward + gamma * max_next_q)


class QTable:
    """Dense ``(n_states, n_actions)`` table of action-value estimates."""

    def __init__(self, n_states: int, n_actions: int, values=None):
        if values is None:
            values = np.zeros((n_states, n_actions))
        values = np.array(values, dtype=float)
        if values.shape != (n_states, n_actions):
            raise ConfigError(f"QTable shape {values.shape} != {(n_states, n_actions)}")
        if not np.all(np.isfinite(values)):
            raise ConfigError("QTable entries must be finite")
        self.values = values

    @classmethod
    def for_env(cls, spec: EnvSpec) -> "QTable":
        return cls(spec.n_states, spec.n_actions)

    @property
    def shape(self) -> tuple:
        return self.values.shape

    def __getitem__(self, key) -> float:
        return float(self.values[key])

    def __setitem__(self, key, value: float) -> None:
        self.values[key] = value

    def max_q(self, state: int) -> float:
        return float(self.values[state].max())

    def greedy(self, state: int) -> int:
        # np.argmax returns the first maximum: ties go to the lowest action index
        return int(np.argmax(self.values[state]))

    def copy(self) -> "QTable":
        return QTable(*self.shape, values=self.values.copy())


@dataclass(frozen=True)
class StepRecord:
    state: int
    action: int
    reward: float
    next_state: int
    q_before: float
    q_after: float
    max_next_q: float


@dataclass(frozen=True)
class EpisodeTrace:
    steps: tuple

    def __post_init__(self):
        if not self.steps:
            raise ValueError("an episode trace needs at least one step")

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def rewards(self) -> list[float]:
        return [s.reward for s in self.steps]


@dataclass(frozen=True)
class RunTrace:
    episodes: tuple
    gamma: float
    alphas: tuple  # alpha used in each episode
    final_q: Optional[QTable] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.episodes:
            raise ValueError("a run needs at least one episode")
        if len(self.alphas) != len(self.episodes):
            raise ValueError("one alpha per episode is required")

    @property
    def n_episodes(self) -> int:
        return len(self.episodes)

    @property
    def lengths(self) -> list[int]:
        return [len(ep) for ep in self.episodes]

    @property
    def rewards(self) -> list[list[float]]:
        return [ep.rewards for ep in self.episodes]


def run_episode(
    spec: EnvSpec,
    q: QTable,
    alpha: float,
    gamma: float,
    explore_rate: float,
    rng: np.random.Generator,
) -> EpisodeTrace:
    """Run one epsilon-greedy episode, updating ``q`` in place.

    Terminal successors contribute no bootstrap term (their max Q is taken as 0).
    The episode stops at a terminal state or after ``spec.max_steps`` steps.
    """
    _check_rates(alpha, gamma)
    if not 0.0 <= explore_rate <= 1.0:
        raise DomainError(f"explore_rate must be in [0, 1], got {explore_rate}")

    state = env_reset(spec)
    if spec.is_terminal(state):
        raise SteppedTerminal(f"start state {state} is terminal; nothing to run")
    steps = []
    for _ in range(spec.max_steps):
        if rng.random() < explore_rate:
            action = int(rng.integers(spec.n_actions))
        else:
            action = q.greedy(state)
        nxt, reward, done = env_step(spec, state, action)
        max_next = 0.0 if done else q.max_q(nxt)
        before = q[state, action]
        after = q_update(before, reward, gamma, max_next, alpha)
        q[state, action] = after
        steps.append(StepRecord(state, action, reward, nxt, before, after, max_next))
        state = nxt
        if done:
            break
    return EpisodeTrace(tuple(steps))


def run_training(
    spec: EnvSpec,
    episodes: int,
    alpha: Union[float, "AlphaSchedule"] = 0.1,
    gamma: float = 0.9,
    explore_rate: float = 0.1,
    seed: Optional[int] = 0,
    q: Optional[QTable] = None,
) -> RunTrace:
    """Train for ``episodes`` episodes sharing one Q table.

    ``alpha`` is either a fixed learning rate or an
    :class:`~geonash.tuner.AlphaSchedule`, in which case the rate for each
    episode is recomputed from the rewards of the episodes completed so far.
    """
    from .tuner import AlphaSchedule, adaptive_alpha

    if episodes < 1:
        raise ConfigError("episodes must be >= 1")
    rng = np.random.default_rng(seed)
    q = QTable.for_env(spec) if q is None else q
    traces, alphas = [], []
    for _ in range(episodes):
        if isinstance(alpha, AlphaSchedule):
            a = adaptive_alpha(alpha, [t.rewards for t in traces])
        else:
            a = float(alpha)
        traces.append(run_episode(spec, q, a, gamma, explore_rate, rng))
        alphas.append(a)
    return RunTrace(tuple(traces), float(gamma), tuple(alphas), final_q=q)


def replay_bellman(run: RunTrace) -> float:
    """Largest deviation between recorded updates and a fresh ``q_update`` replay."""
    worst = 0.0
    for ep, a in zip(run.episodes, run.alphas):
        for s in ep.steps:
            expect = q_update(s.q_before, s.reward, run.gamma, s.max_next_q, a)
            worst = max(worst, abs(expect - s.q_after))
    return worst


def chained(trace: EpisodeTrace) -> bool:
    return all(a.next_state == b.state for a, b in zip(trace.steps, trace.steps[1:]))
