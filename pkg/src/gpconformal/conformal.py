"""Conformal prediction intervals.

Generic split, jackknife and jackknife+ constructions work with any point
predictor given as ``fit_fn(Dataset) -> callable(points) -> values``. The
GP variants use variance-normalized leave-one-out scores

    R_i = (Z_i - m_{-i}(x_i)) / max(eps, sd_{-i}(x_i) ** beta)

taken in absolute value except for the asymmetric variant.

Order-statistic ranks are 1-based and clamped to [1, n].
"""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil, floor
from typing import Callable

import numpy as np
from scipy import linalg

from .errors import DomainError, LevelError
from .gp import Dataset, FittedGP, _points, _solves, fit, loo_predict_all, posterior_mean
from .interval import PredictionInterval
from .kernel import cross_covariance, scaled_distances

# guards ceil/floor against alpha * (n + 1) landing a few ulps off an integer
_RANK_TOL = 1e-9

Predictor = Callable[[np.ndarray], np.ndarray]
FitFn = Callable[[Dataset], Predictor]


def _check_alpha(alpha):
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")


def ceil_rank(x: float) -> int:
    return int(ceil(x - _RANK_TOL))


def floor_rank(x: float) -> int:
    return int(floor(x + _RANK_TOL))


def _clamp(k, n):
    return min(max(k, 1), n)


def conformal_quantile(scores, alpha: float) -> float:
    """The ceil(alpha (m + 1))-th smallest of m scores."""
    _check_alpha(alpha)
    scores = np.sort(np.asarray(scores, dtype=float))
    m = scores.shape[0]
    k = ceil_rank(alpha * (m + 1))
    if k > m:
        raise LevelError(
            f"{m} calibration scores cannot support level {alpha}; the interval is unbounded"
        )
    return float(scores[k - 1])


def jplus_ranks(n: int, alpha: float, strict: bool = True) -> tuple[int, int]:
    """Ranks (lower, upper) of the jackknife+ order statistics."""
    _check_alpha(alpha)
    if strict and alpha > n / (n + 1) + _RANK_TOL:
        raise LevelError(f"level {alpha} exceeds n/(n+1) = {n / (n + 1):.6g}")
    lo = floor_rank((n + 1) * (1.0 - alpha))
    hi = ceil_rank((n + 1) * alpha)
    return _clamp(lo, n), _clamp(hi, n)


def asym_ranks(n: int, alpha: float) -> tuple[int, int]:
    _check_alpha(alpha)
    lo = floor_rank((1.0 - alpha) / 2.0 * (n + 1))
    hi = floor_rank((1.0 + alpha) / 2.0 * (n + 1))
    return _clamp(lo, n), _clamp(hi, n)


# ---------------------------------------------------------------------------
# generic predictors


def _predict_one(predictor: Predictor, x) -> float:
    return float(np.asarray(predictor(np.atleast_2d(np.asarray(x, dtype=float)))).ravel()[0])


def _residuals(predictor: Predictor, data: Dataset) -> np.ndarray:
    return np.abs(data.values - np.asarray(predictor(data.points), dtype=float).ravel())


def scp_interval(train: Dataset, cal: Dataset, fit_fn: FitFn, x, alpha: float) -> PredictionInterval:
    """Split conformal interval: fit on ``train``, calibrate residuals on ``cal``."""
    if len(cal) < 1:
        raise DomainError("calibration set is empty")
    predictor = fit_fn(train)
    q = conformal_quantile(_residuals(predictor, cal), alpha)
    s = _predict_one(predictor, x)
    return PredictionInterval(s - q, s + q, alpha)


def loo_residuals(data: Dataset, fit_fn: FitFn) -> tuple[np.ndarray, list]:
    """Absolute LOO residuals and the n leave-one-out predictors."""
    predictors = [fit_fn(data.drop(i)) for i in range(len(data))]
    res = np.array(
        [abs(data.values[i] - _predict_one(p, data.points[i])) for i, p in enumerate(predictors)]
    )
    return res, predictors


def jcp_interval(data: Dataset, fit_fn: FitFn, x, alpha: float) -> PredictionInterval:
    if len(data) < 2:
        raise DomainError("jackknife needs at least two observations")
    res, _ = loo_residuals(data, fit_fn)
    q = conformal_quantile(res, alpha)
    s = _predict_one(fit_fn(data), x)
    return PredictionInterval(s - q, s + q, alpha)


def jplus_bounds(loo_preds, scores, lo_rank: int, hi_rank: int):
    """Jackknife+ bounds from LOO predictions (n, ...) and half-widths (n, ...)."""
    lower = np.sort(loo_preds - scores, axis=0)[lo_rank - 1]
    upper = np.sort(loo_preds + scores, axis=0)[hi_rank - 1]
    return lower, upper


def jplus_interval(data: Dataset, fit_fn: FitFn, x, alpha: float) -> PredictionInterval:
    n = len(data)
    lo, hi = jplus_ranks(n, alpha)
    res, predictors = loo_residuals(data, fit_fn)
    preds = np.array([_predict_one(p, x) for p in predictors])
    lower, upper = jplus_bounds(preds, res, lo, hi)
    return PredictionInterval(float(lower), float(upper), alpha)


# ---------------------------------------------------------------------------
# GP scores


@dataclass(frozen=True)
class ScoreConfig:
    """Score normalization settings.

    ``epsilon=None`` resolves to 1e-8 times the model's prior standard
    deviation.
    """

    beta: float = 1.0
    epsilon: float | None = None

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError("beta must be positive")
        if self.epsilon is not None and self.epsilon < 0:
            raise DomainError("epsilon must be nonnegative")

    def eps_for(self, model: FittedGP) -> float:
        if self.epsilon is None:
            return 1e-8 * np.sqrt(model.spec.variance)
        return float(self.epsilon)


def _normalizer(sd, eps, beta):
    return np.maximum(eps, sd**beta)


def gp_loo_scores(model: FittedGP, cfg: ScoreConfig = ScoreConfig(), signed: bool = False) -> np.ndarray:
    loo_mean, loo_sd = model.loo_cache
    r = (model.data.values - loo_mean) / _normalizer(loo_sd, cfg.eps_for(model), cfg.beta)
    return r if signed else np.abs(r)


def jplus_gp_sequences(model: FittedGP, cfg: ScoreConfig, x):
    """Sorted J+GP sequences xi^- and xi^+ at the rows of ``x``, each (n, m)."""
    x, _ = _points(model, x)
    eps = cfg.eps_for(model)
    r = gp_loo_scores(model, cfg)
    loo_m, loo_s = loo_predict_all(model, x)
    half = r[:, None] * _normalizer(loo_s, eps, cfg.beta)
    return np.sort(loo_m - half, axis=0), np.sort(loo_m + half, axis=0)


def asym_jplus_gp_sequence(model: FittedGP, cfg: ScoreConfig, x):
    """Sorted asymJ+GP sequence xi at the rows of ``x``, shape (n, m)."""
    x, _ = _points(model, x)
    eps = cfg.eps_for(model)
    r = gp_loo_scores(model, cfg, signed=True)
    loo_m, loo_s = loo_predict_all(model, x)
    return np.sort(loo_m + r[:, None] * np.maximum(eps, loo_s), axis=0)


def _single(model, x):
    x, _ = _points(model, x)
    if x.shape[0] != 1:
        raise DomainError("expected a single point")
    return x


def jplus_gp_interval(model: FittedGP, cfg: ScoreConfig, x, alpha: float) -> PredictionInterval:
    lo, hi = jplus_ranks(model.n, alpha)
    xm, xp = jplus_gp_sequences(model, cfg, _single(model, x))
    return PredictionInterval(float(xm[lo - 1, 0]), float(xp[hi - 1, 0]), alpha)


def asym_jplus_gp_interval(model: FittedGP, cfg: ScoreConfig, x, alpha: float) -> PredictionInterval:
    lo, hi = asym_ranks(model.n, alpha)
    xi = asym_jplus_gp_sequence(model, cfg, _single(model, x))
    return PredictionInterval(float(xi[lo - 1, 0]), float(xi[hi - 1, 0]), alpha)


# ---------------------------------------------------------------------------
# full conformal for GP


def fcp_gp_coefficients(model: FittedGP, cfg: ScoreConfig, x):
    """Affine score coefficients on the augmented dataset.

    For a candidate value z at the new site, the normalized LOO residual of
    observation i (the new site is the last index) is ``a_i + b_i z``.
    Returns arrays ``a, b`` of shape (n + 1, m).
    """
    x, _ = _points(model, x)
    if np.any(scaled_distances(model.spec, x, model.data.points).min(axis=1) == 0):
        raise DomainError("the new site coincides with a training point")
    spec, eta = model.spec, model.nugget
    z = model.data.values
    kinv, r = model.kinv, model.kinv_one
    kx = cross_covariance(spec, model.data.points, x)
    v, t = _solves(model, kx)
    c = spec.variance * (1.0 + eta) - np.einsum("ij,ij->j", v, v)
    tsum = t.sum(axis=0)
    # inverse of the augmented Gram matrix through its Schur complement c
    h = np.vstack([r[:, None] + t * ((tsum - 1.0) / c), ((1.0 - tsum) / c)[None, :]])
    s_aug = model.one_kinv_one + (tsum - 1.0) ** 2 / c
    diag_aug = np.vstack([np.diag(kinv)[:, None] + t**2 / c, (1.0 / c)[None, :]])
    qd = diag_aug - h**2 / s_aug
    kz = linalg.cho_solve((model.chol, True), z)
    tz = z @ t
    kinv_aug_z = np.vstack([kz[:, None] + t * (tz / c), (-tz / c)[None, :]])
    p_coef = kinv_aug_z - h * ((z @ h[:-1]) / s_aug)
    s_coef = np.vstack([-t / c, (1.0 / c)[None, :]]) - h * (h[-1] / s_aug)
    sd = np.sqrt(np.maximum(1.0 / qd - eta * spec.variance, 0.0))
    denom = qd * _normalizer(sd, cfg.eps_for(model), cfg.beta)
    return p_coef / denom, s_coef / denom


def _segments(a: np.ndarray, b: np.ndarray):
    """Breakpoints and gamma on the segments they delimit, for one site.

    gamma(z) = #{i : |a_i + b_i z| <= |a_last + b_last z|}; it is constant
    between consecutive roots of (a_i -/+ a_last) + (b_i -/+ b_last) z.
    """
    a0, b0 = a[-1], b[-1]
    num = np.concatenate([a[:-1] - a0, a[:-1] + a0])
    den = np.concatenate([b[:-1] - b0, b[:-1] + b0])
    with np.errstate(divide="ignore", invalid="ignore"):
        roots = -num / den
    bps = np.unique(roots[np.isfinite(roots)])
    if bps.size == 0:
        probe = np.array([0.0])
    else:
        span = max(bps[-1] - bps[0], np.max(np.abs(bps)), 1.0)
        probe = np.concatenate(
            [[bps[0] - span], 0.5 * (bps[:-1] + bps[1:]), [bps[-1] + span]]
        )
    gamma = np.sum(np.abs(a[:, None] + b[:, None] * probe) <= np.abs(a0 + b0 * probe), axis=0)
    edges = np.concatenate([[-np.inf], bps, [np.inf]])
    return edges, gamma


def fcp_gp_structure(model: FittedGP, cfg: ScoreConfig, x) -> list:
    """Per-site (edges, gamma) pairs; segment j is (edges[j], edges[j+1])."""
    a, b = fcp_gp_coefficients(model, cfg, x)
    return [_segments(a[:, j], b[:, j]) for j in range(a.shape[1])]


def fcp_gp_pieces(edges, gamma, k: int) -> list:
    """Maximal sub-intervals where gamma <= k."""
    ok = gamma <= k
    pieces = []
    j = 0
    while j < ok.size:
        if ok[j]:
            start = j
            while j + 1 < ok.size and ok[j + 1]:
                j += 1
            pieces.append((float(edges[start]), float(edges[j + 1])))
        j += 1
    return pieces


def fcp_gp_hulls(edges, gamma, ks):
    """Convex hull bounds of the accepted set for each threshold in ``ks``."""
    ks = np.asarray(ks)
    first = np.minimum.accumulate(gamma)
    last = np.minimum.accumulate(gamma[::-1])[::-1]
    ok_first = first[None, :] <= ks[:, None]
    ok_last = last[None, :] <= ks[:, None]
    i_lo = np.argmax(ok_first, axis=1)
    i_hi = gamma.size - 1 - np.argmax(ok_last[:, ::-1], axis=1)
    empty = ~ok_first.any(axis=1)
    lower = edges[i_lo]
    upper = edges[i_hi + 1]
    lower = np.where(empty, np.nan, lower)
    upper = np.where(empty, np.nan, upper)
    return lower, upper


def fcp_rank(n: int, alpha: float) -> int:
    _check_alpha(alpha)
    return ceil_rank(alpha * (n + 1))


def fcp_gp_interval(model: FittedGP, cfg: ScoreConfig, x, alpha: float) -> PredictionInterval:
    """Exact full-conformal set {z : gamma(z) <= ceil(alpha (n+1))}, as its hull."""
    k = fcp_rank(model.n, alpha)
    edges, gamma = fcp_gp_structure(model, cfg, _single(model, x))[0]
    pieces = fcp_gp_pieces(edges, gamma, k)
    if not pieces:
        # only isolated points can be accepted; fall back to the point prediction
        m = posterior_mean(model, x)
        return PredictionInterval(m, m, alpha)
    return PredictionInterval(
        pieces[0][0], pieces[-1][1], alpha, contiguous=len(pieces) == 1, pieces=tuple(pieces)
    )


def fcp_gp_gamma(model: FittedGP, cfg: ScoreConfig, x, z: float) -> int:
    """gamma(z) by refitting the augmented model; slow reference path."""
    aug = fit(model.spec, model.data.append(np.ravel(x), z), model.nugget)
    scores = gp_loo_scores(aug, cfg)
    return int(np.sum(scores <= scores[-1]))
