import numpy as np
import pytest
from hypothesis import settings

from garo.robust import LinearDecisionProblem
from garo.uncertainty import Ellipsoid, NormBall

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture
def simplex_l1():
    """Two-dimensional simplex with an l1 ball around (1, 2)."""
    return LinearDecisionProblem.simplex(2), NormBall(np.array([1.0, 2.0]), "l1")


@pytest.fixture
def covering_ellipsoid():
    """x in [0, 10]^2 with x1 + x2 >= 1, unit ellipsoid around (1, 2)."""
    prob = LinearDecisionProblem(np.array([[1.0, 1.0]]), [1.0], 0.0, 10.0)
    return prob, Ellipsoid(np.array([1.0, 2.0]), np.eye(2))


def random_polytope(rng, n, rows=2):
    """A bounded, nonempty region: box [0, 1]^n plus covering rows satisfied at the all-ones point."""
    A = rng.uniform(0.1, 1.0, (rows, n))
    b = A.sum(axis=1) * rng.uniform(0.2, 0.6, rows)
    return LinearDecisionProblem(A, b, 0.0, 1.0)


def tent_rate():
    """Tabulated rate for the simplex-l1 instance on [0, 2].

    Flat up to 4/3, then rising so that regret/rate decays linearly to the
    right of 4/3 exactly as it grows to the left; the optimum budget is 1/8
    and discretization error is proportional to the grid step.
    """
    from garo.rates import Tabulated

    peak, top = 4.0 / 3.0, 1.6
    knots = np.concatenate([[0.0], np.linspace(peak, top, 160), [2.0]])
    inner = (knots[1:-1] - 1.0) / (5.0 / 3.0 - knots[1:-1])
    return Tabulated(knots, np.concatenate([[1.0], inner, [2.0 * inner[-1]]]))


# one line per acceptance criterion, echoed again in the terminal summary
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
