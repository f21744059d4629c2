import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpconformal.errors import DomainError
from gpconformal.kernel import CovarianceSpec, covariance, gram_matrix, matern_correlation

# kappa_{5/2}(1) from the closed form evaluated with mpmath at 50 digits
MATERN_P2_AT_1 = 0.52399410883182031059


def test_correlation_at_zero():
    for p in range(1, 10):
        assert matern_correlation(0.0, p) == 1.0


def test_correlation_tail_vanishes():
    assert matern_correlation(50.0, 2) < 1e-10


def test_correlation_high_precision_value():
    assert matern_correlation(1.0, 2) == pytest.approx(MATERN_P2_AT_1, rel=1e-14)


def test_p1_closed_form():
    h = np.linspace(0, 10, 201)
    expected = np.exp(-np.sqrt(3) * h) * (1 + np.sqrt(3) * h)
    np.testing.assert_allclose(matern_correlation(h, 1), expected, rtol=1e-12, atol=1e-300)


@pytest.mark.parametrize("h, p", [(-0.1, 2), (1.0, 0), (1.0, 1.5)])
def test_correlation_domain_errors(h, p):
    with pytest.raises(DomainError):
        matern_correlation(h, p)


@settings(max_examples=200)
@given(
    st.floats(0, 20, allow_nan=False),
    st.floats(1e-3, 20, allow_nan=False),
    st.integers(1, 9),
)
def test_correlation_strictly_decreasing(h1, dh, p):
    h2 = h1 + dh
    k1, k2 = matern_correlation(h1, p), matern_correlation(h2, p)
    # below ~1e-300 the tail underflows to equal values
    if k1 > 1e-250:
        assert k2 < k1


def test_covariance_variance_at_origin():
    spec = CovarianceSpec(4.0, (0.3, 2.0), 2)
    assert covariance(spec, [0.1, 0.7], [0.1, 0.7]) == 4.0


def test_covariance_scale_equivariance():
    spec = CovarianceSpec(1.7, (0.3, 0.9), 3)
    doubled = CovarianceSpec(1.7, (0.6, 1.8), 3)
    x, y = np.array([0.2, 0.1]), np.array([0.5, -0.3])
    assert covariance(doubled, 2 * x, 2 * y) == pytest.approx(covariance(spec, x, y), rel=1e-14)


def test_covariance_isotropic_unit_reduction():
    spec = CovarianceSpec(1.0, (1.0, 1.0), 1)
    assert covariance(spec, [0, 0], [1, 0]) == matern_correlation(1.0, 1)


def test_covariance_symmetry_and_linearity():
    rng = np.random.default_rng(3)
    for _ in range(20):
        x, y = rng.normal(size=3), rng.normal(size=3)
        spec = CovarianceSpec(2.5, rng.uniform(0.2, 2, 3), 2)
        assert covariance(spec, x, y) == covariance(spec, y, x)
        assert covariance(spec.with_variance(5.0), x, y) == pytest.approx(2 * covariance(spec, x, y), rel=1e-14)


def test_covariance_dimension_mismatch():
    spec = CovarianceSpec(1.0, (1.0, 1.0), 1)
    with pytest.raises(DomainError):
        covariance(spec, [0, 0, 0], [1, 0])


@pytest.mark.parametrize(
    "kwargs",
    [dict(variance=0.0, lengthscales=(1.0,)), dict(variance=1.0, lengthscales=(1.0, -1.0)), dict(variance=1.0, lengthscales=(1.0,), regularity_p=0)],
)
def test_spec_invariants(kwargs):
    with pytest.raises(DomainError):
        CovarianceSpec(**kwargs)


def test_gram_single_point():
    spec = CovarianceSpec(3.0, (1.0,), 2)
    np.testing.assert_array_equal(gram_matrix(spec, [[0.4]], nugget=0.0), [[3.0]])


def test_gram_symmetric_exactly():
    rng = np.random.default_rng(0)
    spec = CovarianceSpec(1.3, (0.4, 0.8), 2)
    K = gram_matrix(spec, rng.uniform(size=(15, 2)))
    np.testing.assert_array_equal(K, K.T)


def test_gram_positive_definite_eigen_oracle():
    rng = np.random.default_rng(11)
    spec = CovarianceSpec(1.0, (0.5, 0.5), 2)
    K = gram_matrix(spec, rng.uniform(size=(3, 2)), nugget=1e-10)
    assert np.linalg.eigvalsh(K).min() > 0


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 8), st.integers(1, 3), st.integers(1, 5), st.integers(0, 2**31))
def test_gram_positive_definite_random(n, d, p, seed):
    rng = np.random.default_rng(seed)
    spec = CovarianceSpec(1.0, rng.uniform(0.1, 1.0, d), p)
    X = rng.uniform(size=(n, d))
    K = gram_matrix(spec, X, nugget=1e-8)
    assert np.linalg.eigvalsh(K).min() > 0
