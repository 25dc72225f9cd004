import numpy as np
import pytest
from hypothesis import given, strategies as st

from garo.rates import (Constant, OracleCost, Power, Tabulated, interval_conjugate, perspective_conjugate,
                        rate_eval)
from garo.robust import trace_oracle_path
from garo.uncertainty import GammaInterval


def grid_conjugate(phi, a, b, delta, points=100_001):
    g = np.linspace(a, b, points)
    return float(np.max(delta * g - np.array([phi(t) for t in g])))


def test_evaluation_examples(simplex_l1):
    assert rate_eval(Power(2), 1.0) == 4.0
    assert rate_eval(Constant(), 17.0) == 1.0
    path = trace_oracle_path(*simplex_l1, GammaInterval(0.0, 2.0))
    assert rate_eval(OracleCost.from_path(path), 1.5) == pytest.approx(2.25, abs=1e-9)


def test_tabulated_interpolates_and_rejects_outside():
    tab = Tabulated([0.0, 1.0, 3.0], [1.0, 2.0, 3.0])
    assert tab(2.0) == pytest.approx(2.5)
    assert tab.concave
    with pytest.raises(ValueError):
        tab(3.5)
    with pytest.raises(ValueError):
        Tabulated([0.0, 1.0], [2.0, 1.0])


def test_conjugate_examples():
    assert interval_conjugate(Power(2), (0.0, 1.0), 2.0) == pytest.approx(-1.0, abs=1e-12)
    assert grid_conjugate(Power(2), 0.0, 1.0, 2.0) == pytest.approx(-1.0, abs=1e-9)
    assert interval_conjugate(Constant(), (0.0, 2.0), 1.5) == pytest.approx(2.0)
    assert interval_conjugate(Constant(), (1.0, 2.0), -1.0) == pytest.approx(-2.0)


def test_perspective_examples():
    phi = Power(2)
    assert perspective_conjugate(phi, (0.0, 1.0), 2.0, 1.0) == interval_conjugate(phi, (0.0, 1.0), 2.0)
    assert perspective_conjugate(phi, (0.0, 2.0), 1.0, 0.0) == 2.0
    assert perspective_conjugate(phi, (0.0, 1.0), 2.0, 2.0) == pytest.approx(-2.0, abs=1e-12)
    g = np.linspace(0, 1, 100_001)
    assert np.max(2 * (g - (1 + g) ** 2)) == pytest.approx(-2.0, abs=1e-9)
    with pytest.raises(ValueError):
        perspective_conjugate(phi, (0.0, 1.0), 1.0, -1.0)


rates = st.one_of(
    st.just(Constant()),
    st.floats(0, 3).map(Power),
    st.lists(st.floats(0, 2), min_size=1, max_size=4).map(
        lambda inc: Tabulated(np.linspace(0, 5, len(inc) + 1), np.concatenate([[0.5], 0.5 + np.cumsum(inc)]))),
)


@given(rates, st.floats(0, 5), st.floats(0, 5), st.floats(-10, 10))
def test_conjugate_against_dense_grid(phi, a, b, delta):
    a, b = sorted((a, b))
    exact = interval_conjugate(phi, (a, b), delta)
    assert exact == pytest.approx(grid_conjugate(phi, a, b, delta), abs=1e-6 * (1 + abs(exact)))


@given(rates, st.floats(0, 5), st.floats(0, 5), st.floats(-10, 10), st.floats(0.01, 10))
def test_perspective_scaling(phi, a, b, delta, alpha):
    a, b = sorted((a, b))
    lhs = perspective_conjugate(phi, (a, b), delta, alpha)
    assert lhs == pytest.approx(alpha * grid_conjugate(phi, a, b, delta / alpha, 20_001),
                                abs=1e-4 * (1 + abs(lhs)))


@given(rates, st.floats(0, 5), st.floats(0, 5))
def test_rates_nonnegative_nondecreasing(phi, g1, g2):
    lo, hi = sorted((g1, g2))
    assert 0 <= phi(lo) <= phi(hi) + 1e-12


@given(st.floats(0, 4), st.floats(0, 5), st.floats(0, 5))
def test_power_lipschitz_bound_valid(q, a, b):
    a, b = sorted((a, b))
    phi = Power(q)
    g = np.linspace(a, b, 201)
    vals = np.array([phi(t) for t in g])
    if b > a:
        steps = np.diff(g)
        # finite differences on tiny steps carry rounding of a few ulps of phi per step
        rounding = 4 * np.finfo(float).eps * max(1.0, phi(b)) / steps.min()
        assert np.max(np.abs(np.diff(vals) / steps)) <= phi.lipschitz(a, b) * (1 + 1e-9) + 1e-12 + rounding


def test_power_concavity_flag():
    assert Power(0.5).concave and Power(1).concave and not Power(2).concave
    with pytest.raises(ValueError):
        Power(-1)
