import math

import numpy as np
import pytest
from scipy.optimize import brentq

from geonash.errors import DomainError, EmptyVector
from geonash.stability import (
    bisect,
    bisection_endpoints,
    cauchy_schwarz_ratio,
    critical_points,
    in_stable_region,
    lhs_ratio,
    lhs_ratio_derivative,
    ratio_to_alpha,
    stability_report,
    stable_intervals,
)


def central_diff(f, x, h=1e-6):
    return (f(x + h) - f(x - h)) / (2 * h)


def test_lhs_ratio_values():
    assert lhs_ratio(0.0) == 0.75
    assert lhs_ratio(0.5) == 0.0
    assert lhs_ratio(-7 / 12) == pytest.approx(13.0, abs=1e-9)
    assert lhs_ratio(7.0) == pytest.approx(0.75, abs=1e-15)


def test_critical_points():
    pts = critical_points()
    assert pts[0][0] == pytest.approx(-7 / 12, abs=1e-15)
    assert pts[0][1] == pytest.approx(13.0, abs=1e-9)
    assert pts[1] == (0.5, 0.0)
    assert abs(central_diff(lhs_ratio, 0.5)) < 1e-6
    assert abs(central_diff(lhs_ratio, -7 / 12)) < 1e-4


def test_derivative_matches_finite_differences():
    for x in np.linspace(-0.5, 10, 100):
        fd = central_diff(lhs_ratio, x, 1e-5)
        an = lhs_ratio_derivative(x)
        assert an == pytest.approx(fd, rel=1e-5, abs=1e-9)


def test_stable_interval_endpoints():
    (a, b), (c, d) = stable_intervals()
    assert a == 0.0 and d == 7.0
    assert b == pytest.approx(0.0566243, abs=1e-6)
    assert c == pytest.approx(2.94338, abs=1e-5)
    assert b == pytest.approx((9 - 5 * math.sqrt(3)) / 6, abs=1e-15)
    assert c == pytest.approx((9 + 5 * math.sqrt(3)) / 6, abs=1e-15)
    assert 0.5 < lhs_ratio(0.02) < 0.75


def test_endpoints_agree_with_root_finders():
    closed = [x for iv in stable_intervals() for x in iv]
    half = lambda x: lhs_ratio(x) - 0.5
    upper = lambda x: lhs_ratio(x) - 0.75
    independent = [
        brentq(upper, -0.5, 0.25, xtol=1e-15),
        brentq(half, 0.0, 0.5, xtol=1e-15),
        brentq(half, 0.5, 5.0, xtol=1e-15),
        brentq(upper, 5.0, 10.0, xtol=1e-15),
    ]
    assert np.allclose(closed, independent, atol=1e-10, rtol=0)
    assert np.allclose(closed, bisection_endpoints(), atol=1e-10, rtol=0)


def test_dense_sampling_inside_and_outside():
    for lo, hi in stable_intervals():
        xs = np.linspace(lo, hi, 2002)[1:-1]
        assert all(in_stable_region(x) for x in xs)
        for x in (lo - 1e-6, hi + 1e-6):
            assert not in_stable_region(x)


def test_cauchy_schwarz_upheld_above_minus_1_24():
    xs = np.linspace(-1 / 24, 10, 20001)[1:]
    assert np.all(np.array([lhs_ratio(x) for x in xs]) < 1.0)
    assert lhs_ratio(-1 / 24 - 1e-3) > 1.0


def test_bisect_rejects_bad_bracket():
    with pytest.raises(DomainError):
        bisect(lambda x: x * x + 1, -1, 1)
    assert bisect(lambda x: x - 0.25, 0.0, 1.0) == pytest.approx(0.25, abs=1e-14)


def test_cauchy_schwarz_ratio_examples():
    assert cauchy_schwarz_ratio([1, 1, 1]) == 1.0
    assert cauchy_schwarz_ratio([1, 2, 3]) == pytest.approx(36 / 42, abs=1e-15)
    assert cauchy_schwarz_ratio([5]) == 1.0
    with pytest.raises(EmptyVector):
        cauchy_schwarz_ratio([])


def test_ratio_to_alpha():
    a, th = ratio_to_alpha(0.75)
    assert a == pytest.approx(math.sqrt(3) / 2, abs=1e-15)
    assert th == pytest.approx(math.pi / 6, abs=1e-12)
    a, th = ratio_to_alpha(0.5)
    assert th == pytest.approx(math.pi / 4, abs=1e-12)
    assert ratio_to_alpha(1.0) == (1.0, 0.0)
    with pytest.raises(DomainError):
        ratio_to_alpha(1.5)


def test_report_contents():
    rep = stability_report([0.0, 0.5, 0.02, 0.5])
    assert [x for x, _ in rep.samples] == [0.0, 0.02, 0.5]
    doc = rep.to_dict()
    assert doc["ratio_at_zero"] == 0.75
    assert [iv["within_premise"] for iv in doc["stable_intervals"]] == [True, False]
    assert doc["alpha_bounds"]["lower"] == pytest.approx(math.sqrt(0.5))
    assert doc["alpha_bounds"]["upper"] == pytest.approx(math.sqrt(0.75))
    assert doc["theta_bounds_deg"]["lower"] == pytest.approx(30.0)
