import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpconformal.errors import DomainError
from gpconformal.interval import PredictionInterval
from gpconformal.metrics import (
    coverage_curve,
    covered,
    empirical_coverage,
    iae,
    iae_grid,
    mean_width,
    rmse,
)


def intervals(pairs):
    return [PredictionInterval(lo, hi, 0.9) for lo, hi in pairs]


def test_coverage_all_inside():
    assert empirical_coverage(intervals([(-1, 1), (0, 2)]), [0.0, 2.0]) == 1.0


def test_coverage_half():
    assert empirical_coverage(intervals([(-1, 1), (-1, 1)]), [0.0, 5.0]) == 0.5


def test_coverage_closed_endpoints():
    np.testing.assert_array_equal(covered([0.0, 0.0], [1.0, 1.0], [0.0, 1.0]), [True, True])


def test_coverage_errors():
    with pytest.raises(DomainError):
        empirical_coverage([], [])
    with pytest.raises(DomainError):
        empirical_coverage(intervals([(0, 1)]), [0.0, 1.0])


def test_rmse():
    assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert rmse([3.0, 4.0], [0.0, 0.0]) == pytest.approx(np.sqrt(25 / 2), rel=1e-15)
    with pytest.raises(DomainError):
        rmse([], [])


def test_mean_width():
    assert mean_width(intervals([(0, 2), (1, 3)])) == 2.0
    assert mean_width(intervals([(0, 1), (0, 3)])) == 2.0
    assert mean_width(intervals([(4, 4), (-1, -1)])) == 0.0
    with pytest.raises(DomainError):
        mean_width([])


def test_default_grid():
    g = iae_grid()
    assert g.size == 99
    assert g[0] == pytest.approx(0.01) and g[-1] == pytest.approx(0.99)


def test_iae_perfect_calibration():
    g = iae_grid()
    assert iae(g, g) == 0.0


def test_iae_always_covering():
    # exact integral is 1/2; the delta(0) = 0 boundary convention trims the first cell
    # to 0.01 * 0.99 / 2, so the trapezoid gives 0.99**2 / 2 + 0.00495 = 0.495
    g = iae_grid()
    assert iae(np.ones_like(g), g) == pytest.approx(0.495, rel=1e-12)
    assert iae(np.ones_like(g), g) == pytest.approx(0.5, abs=0.01)


def test_iae_against_analytic_integral():
    # int_0^1 |min(1, 1.2 a) - a| da = 0.1 (5/6)^2 + (1/6)^2 / 2 = 1/12
    g = iae_grid()
    assert iae(np.minimum(1.0, 1.2 * g), g) == pytest.approx(1 / 12, abs=1e-3)


def test_iae_grid_refinement():
    coarse = iae_grid(99)
    fine = iae_grid(999)
    f = lambda a: np.minimum(1.0, 1.2 * a)
    assert iae(f(coarse), coarse) == pytest.approx(iae(f(fine), fine), abs=1e-3)


@pytest.mark.parametrize(
    "cov, grid",
    [([0.1], [0.5]), ([0.1, 0.2], [0.6, 0.5]), ([0.1, 0.2], [0.0, 0.5]), ([0.1, 0.2, 0.3], [0.2, 0.4])],
)
def test_iae_validation(cov, grid):
    with pytest.raises(DomainError):
        iae(cov, grid)


@settings(max_examples=100)
@given(st.lists(st.floats(0, 1), min_size=99, max_size=99))
def test_iae_bounded(cov):
    g = iae_grid()
    v = iae(np.array(cov), g)
    assert 0.0 <= v <= 1.0


def test_coverage_curve():
    lower = np.array([[-1.0, -1.0], [-3.0, -3.0]])
    upper = -lower
    np.testing.assert_array_equal(coverage_curve(lower, upper, [0.0, 2.0]), [0.5, 1.0])
