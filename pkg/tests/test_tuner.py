import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from geonash.env import geometric_chain, run_training
from geonash.errors import ConfigError, DomainError, EmptyGrid
from geonash.metrics import n1_metric, n2_lenient
from geonash.tuner import (
    AlphaSchedule,
    adaptive_alpha,
    alpha_grid,
    constant_reward_alpha,
    epsilon_nash_search,
    nash_alpha,
)


def brute_force_argmin(n1_fn, n2_fn, grid):
    best_a, best_gap = None, math.inf
    for a in sorted(grid):
        gap = abs(n1_fn(a) - n2_fn(a))
        if gap < best_gap:
            best_a, best_gap = a, gap
    return best_a, best_gap


def test_nash_alpha_examples():
    assert nash_alpha(0.25) == 0.5
    assert nash_alpha(0.0) == 0.0
    with pytest.raises(DomainError):
        nash_alpha(1.5)
    with pytest.raises(DomainError):
        nash_alpha(-0.1)


def test_constant_reward_alpha():
    assert constant_reward_alpha(0.49) == pytest.approx(0.7, abs=1e-15)
    assert constant_reward_alpha(1.0) == 1.0
    assert constant_reward_alpha(0.5) == pytest.approx(0.70710678, abs=1e-8)
    with pytest.raises(DomainError):
        constant_reward_alpha(2.0)


@given(st.floats(min_value=0.0, max_value=1.0))
def test_nash_alpha_squares_back(n2):
    assert nash_alpha(n2) ** 2 == pytest.approx(n2, abs=1e-12)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_nash_alpha_monotone(a, b):
    lo, hi = sorted((a, b))
    assert nash_alpha(lo) <= nash_alpha(hi)


def test_search_finds_sqrt_of_constant():
    grid = alpha_grid(0.01)
    est = epsilon_nash_search(lambda a: a * a, lambda a: 0.49, grid)
    assert (est.alpha_star, est.epsilon) == brute_force_argmin(lambda a: a * a, lambda a: 0.49, grid)
    assert est.alpha_star == 0.7
    assert est.epsilon == pytest.approx(0.0, abs=1e-12)


def test_search_zero_constant():
    est = epsilon_nash_search(lambda a: a * a, lambda a: 0.0, [0.0, 0.3, 1.0])
    assert est.alpha_star == 0.0 and est.epsilon == 0.0


def test_search_tie_goes_to_smaller_alpha():
    est = epsilon_nash_search(lambda a: a * a, lambda a: a, [1.0, 0.5, 0.0])
    assert est.alpha_star == 0.0
    assert est.epsilon == 0.0
    assert [r[0] for r in est.evaluations] == [0.0, 0.5, 1.0]


def test_search_errors():
    with pytest.raises(EmptyGrid):
        epsilon_nash_search(lambda a: a, lambda a: a, [])
    with pytest.raises(DomainError):
        epsilon_nash_search(lambda a: a, lambda a: a, [0.2, 1.2])


@pytest.mark.parametrize("c", [0.0, 0.0625, 0.25, 0.36, 0.81, 1.0])
def test_search_hits_exact_root_on_grid(c):
    est = epsilon_nash_search(lambda a: a * a, lambda a: c, alpha_grid(0.05))
    assert est.alpha_star == pytest.approx(math.sqrt(c), abs=1e-12)
    assert est.epsilon == pytest.approx(0.0, abs=1e-12)


@given(st.floats(0.0, 1.0), st.sampled_from([0.5, 0.25, 0.2, 0.1, 0.05]))
def test_grid_refinement_never_worsens(c, step):
    coarse = epsilon_nash_search(lambda a: a * a, lambda a: c, alpha_grid(step))
    fine = epsilon_nash_search(lambda a: a * a, lambda a: c, alpha_grid(step / 2))
    assert fine.epsilon <= coarse.epsilon


def test_alpha_grid_nested():
    assert set(alpha_grid(0.1)) <= set(alpha_grid(0.05))
    assert alpha_grid(0.5) == [0.0, 0.5, 1.0]
    with pytest.raises(DomainError):
        alpha_grid(0.3)


def test_search_on_trained_geometric_chain():
    spec = geometric_chain(6, 0.25)
    runs = {}

    def run(a):
        return runs.setdefault(a, run_training(spec, 30, a, 0.9, 0.0, seed=0))

    est = epsilon_nash_search(
        lambda a: n1_metric(run(a)), lambda a: n2_lenient(run(a).rewards)[0], alpha_grid(0.05)
    )
    assert est.alpha_star == 0.5
    assert est.n2_at_star == pytest.approx(0.25, abs=1e-12)


def test_adaptive_alpha_examples():
    sched = AlphaSchedule(alpha_0=0.3)
    assert adaptive_alpha(sched, []) == 0.3
    # one episode whose relative rewards average to 0.49
    assert adaptive_alpha(sched, [[1.0, 1.0 / 0.51]]) == pytest.approx(0.7, abs=1e-12)
    capped = AlphaSchedule(alpha_max=0.8)
    assert adaptive_alpha(capped, [[1.0, 10.0]]) == 0.8


def test_adaptive_alpha_window_and_short_episodes():
    sched = AlphaSchedule(alpha_0=0.2, window=1)
    history = [[1.0, 2.0], [5.0, 5.0]]
    assert adaptive_alpha(sched, history) == 0.0
    assert adaptive_alpha(AlphaSchedule(alpha_0=0.2), [[4.0]]) == 0.2


def test_schedule_validation():
    with pytest.raises(ConfigError):
        AlphaSchedule(alpha_min=0.9, alpha_max=0.1)
    with pytest.raises(ConfigError):
        AlphaSchedule(window=0)


def test_adaptive_training_uses_trailing_n2():
    from geonash.env import chain

    sched = AlphaSchedule(alpha_0=0.5)
    run = run_training(chain(5), 30, sched, 0.9, 0.2, seed=3)
    assert run.alphas[0] == 0.5
    for k in range(1, run.n_episodes):
        n2, _ = n2_lenient(run.rewards[:k])
        assert run.alphas[k] == pytest.approx(math.sqrt(n2), abs=1e-15)
    assert len(set(run.alphas)) > 1
