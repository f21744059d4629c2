import numpy as np
import pytest

import oracles
from gpconformal.conformal import (
    ScoreConfig,
    fcp_gp_coefficients,
    fcp_gp_gamma,
    fcp_gp_hulls,
    fcp_gp_interval,
    fcp_gp_pieces,
    fcp_gp_structure,
    fcp_rank,
    gp_loo_scores,
)
from gpconformal.errors import DomainError
from gpconformal.gp import Dataset, fit, posterior_mean, posterior_sd


def make_case(seed, n=None):
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(4, 11))
    d = int(rng.integers(1, 3))
    spec, X, Z = oracles.random_case(rng, n, d)
    return fit(spec, Dataset(X, Z)), rng.uniform(size=d), rng


def in_pieces(z, pieces):
    return any(lo <= z <= hi for lo, hi in pieces)


def test_coefficients_match_refit_scores():
    model, x, _ = make_case(1, n=7)
    cfg = ScoreConfig()
    a, b = fcp_gp_coefficients(model, cfg, x)
    for z in (-3.0, 0.2, 5.0):
        aug = fit(model.spec, model.data.append(x, z), model.nugget)
        expected = gp_loo_scores(aug, cfg, signed=True)
        np.testing.assert_allclose(a[:, 0] + b[:, 0] * z, expected, rtol=1e-6, atol=1e-8 * np.abs(expected).max())


def test_coefficients_batch_equals_single():
    model, _, rng = make_case(2, n=9)
    xs = rng.uniform(size=(6, model.data.dim))
    a, b = fcp_gp_coefficients(model, ScoreConfig(), xs)
    for j in range(6):
        a1, b1 = fcp_gp_coefficients(model, ScoreConfig(), xs[j])
        np.testing.assert_allclose(a[:, j], a1[:, 0], rtol=1e-7, atol=1e-10)
        np.testing.assert_allclose(b[:, j], b1[:, 0], rtol=1e-7, atol=1e-10)


@pytest.mark.parametrize("seed", range(20))
def test_closed_form_matches_grid_scan(seed):
    model, x, _ = make_case(seed)
    cfg = ScoreConfig()
    alpha = 0.8
    k = fcp_rank(model.n, alpha)
    edges, gamma = fcp_gp_structure(model, cfg, x)[0]
    pieces = fcp_gp_pieces(edges, gamma, k)
    m, s = posterior_mean(model, x), posterior_sd(model, x)
    grid = np.linspace(m - 6 * s, m + 6 * s, 2000)
    bps = edges[1:-1]
    for z in grid:
        # a grid point landing on a breakpoint is a tie; skip exact coincidences
        if bps.size and np.min(np.abs(bps - z)) < 1e-9 * (1 + abs(z)):
            continue
        accepted = fcp_gp_gamma(model, cfg, x, z) <= k
        assert accepted == in_pieces(z, pieces), z


def test_midpoint_self_consistency():
    cfg = ScoreConfig()
    for seed in range(10):
        model, x, _ = make_case(seed)
        for alpha in (0.5, 0.8):
            iv = fcp_gp_interval(model, cfg, x, alpha)
            mid = 0.5 * (iv.pieces[0][0] + iv.pieces[0][1]) if iv.pieces else iv.lower
            if not np.isfinite(mid):
                continue
            assert fcp_gp_gamma(model, cfg, x, mid) <= fcp_rank(model.n, alpha)


def test_alpha_near_one_accepts_everything():
    model, x, _ = make_case(4, n=8)
    alpha = 0.995  # ceil(alpha * 9) = 9 = n + 1
    assert fcp_rank(model.n, alpha) == model.n + 1
    iv = fcp_gp_interval(model, ScoreConfig(), x, alpha)
    assert iv.lower == -np.inf and iv.upper == np.inf
    m, s = posterior_mean(model, x), posterior_sd(model, x)
    for z in np.linspace(m - 6 * s, m + 6 * s, 50):
        assert z in iv


def test_training_site_rejected():
    model, _, _ = make_case(3)
    with pytest.raises(DomainError):
        fcp_gp_interval(model, ScoreConfig(), model.data.points[0], 0.8)


def test_interval_contains_posterior_mean():
    # z = m(x) gives the new point a zero residual, so gamma = 1 there
    for seed in range(10):
        model, x, _ = make_case(seed)
        m = posterior_mean(model, x)
        assert fcp_gp_gamma(model, ScoreConfig(), x, m) == 1
        assert m in fcp_gp_interval(model, ScoreConfig(), x, 0.5)


def test_hulls_match_pieces():
    model, x, _ = make_case(7, n=10)
    edges, gamma = fcp_gp_structure(model, ScoreConfig(), x)[0]
    ks = np.arange(1, model.n + 2)
    lower, upper = fcp_gp_hulls(edges, gamma, ks)
    for k, lo, hi in zip(ks, lower, upper):
        pieces = fcp_gp_pieces(edges, gamma, k)
        if pieces:
            assert (lo, hi) == (pieces[0][0], pieces[-1][1])
        else:
            assert np.isnan(lo) and np.isnan(hi)


def test_pieces_helper():
    edges = np.array([-np.inf, 0.0, 1.0, 2.0, np.inf])
    gamma = np.array([5, 2, 4, 1])
    assert fcp_gp_pieces(edges, gamma, 3) == [(0.0, 1.0), (2.0, np.inf)]
    assert fcp_gp_pieces(edges, gamma, 0) == []
    assert fcp_gp_pieces(edges, gamma, 5) == [(-np.inf, np.inf)]


def test_non_contiguous_flag():
    model, x, _ = make_case(0)
    iv = fcp_gp_interval(model, ScoreConfig(), x, 0.5)
    assert iv.contiguous == (len(iv.pieces) == 1)
