"""Interval bounds for every method over a grid of levels.

Each routine returns ``(lower, upper, prediction)`` with ``lower`` and
``upper`` of shape (n_levels, n_points). The order-statistic methods sort
their sequences once per point and only look up ranks per level; FCP-GP
computes its breakpoint structure once per point and sweeps the rank
threshold.

Levels beyond what the jackknife+ family can support are handled by rank
clamping. Split and jackknife intervals become unbounded when the required
order statistic does not exist.
"""
from __future__ import annotations

import numpy as np

from .conformal import (
    ScoreConfig,
    asym_jplus_gp_sequence,
    asym_ranks,
    ceil_rank,
    fcp_gp_hulls,
    fcp_gp_structure,
    fcp_rank,
    jplus_gp_sequences,
    jplus_ranks,
)
from .gp import Dataset, FittedGP, fit, loo_predict_all, normal_quantiles, predict

GP_METHODS = ("gaussian_reml", "fcp_gp", "jplus_gp", "asym_jplus_gp")
GENERIC_METHODS = ("scp", "jcp", "jplus")
METHODS = GP_METHODS + GENERIC_METHODS


def gaussian_bounds(model: FittedGP, x, levels):
    m, s = predict(model, x)
    ql, qu = normal_quantiles(np.asarray(levels))
    return m[None, :] + ql[:, None] * s[None, :], m[None, :] + qu[:, None] * s[None, :], m


def _rank_lookup(sorted_seq, ranks):
    return sorted_seq[np.asarray(ranks) - 1]


def jplus_gp_bounds(model: FittedGP, cfg: ScoreConfig, x, levels):
    lo_seq, hi_seq = jplus_gp_sequences(model, cfg, x)
    ranks = np.array([jplus_ranks(model.n, a, strict=False) for a in levels])
    m, _ = predict(model, x)
    return _rank_lookup(lo_seq, ranks[:, 0]), _rank_lookup(hi_seq, ranks[:, 1]), m


def asym_jplus_gp_bounds(model: FittedGP, cfg: ScoreConfig, x, levels):
    seq = asym_jplus_gp_sequence(model, cfg, x)
    ranks = np.array([asym_ranks(model.n, a) for a in levels])
    m, _ = predict(model, x)
    return _rank_lookup(seq, ranks[:, 0]), _rank_lookup(seq, ranks[:, 1]), m


def fcp_gp_bounds(model: FittedGP, cfg: ScoreConfig, x, levels):
    ks = np.array([fcp_rank(model.n, a) for a in levels])
    m, _ = predict(model, x)
    lower = np.empty((ks.size, m.size))
    upper = np.empty_like(lower)
    for j, (edges, gamma) in enumerate(fcp_gp_structure(model, cfg, x)):
        lower[:, j], upper[:, j] = fcp_gp_hulls(edges, gamma, ks)
    # an empty accepted set (isolated points only) degenerates to the prediction
    empty = np.isnan(lower)
    lower[empty] = np.broadcast_to(m, lower.shape)[empty]
    upper[empty] = np.broadcast_to(m, upper.shape)[empty]
    return lower, upper, m


def _quantiles_or_inf(scores, levels):
    scores = np.sort(scores)
    k = np.array([ceil_rank(a * (scores.size + 1)) for a in levels])
    q = np.full(k.shape, np.inf)
    ok = k <= scores.size
    q[ok] = scores[k[ok] - 1]
    return q


def scp_bounds(model: FittedGP, x, levels, n_train=None):
    """Split conformal with the GP mean refitted on the first ``n_train`` points."""
    data = model.data
    n_train = n_train or len(data) // 2
    sub = fit(model.spec, Dataset(data.points[:n_train], data.values[:n_train]), model.nugget)
    cal_pred, _ = predict(sub, data.points[n_train:])
    q = _quantiles_or_inf(np.abs(data.values[n_train:] - cal_pred), levels)
    s, _ = predict(sub, x)
    return s[None, :] - q[:, None], s[None, :] + q[:, None], s


def jcp_bounds(model: FittedGP, x, levels):
    loo_mean, _ = model.loo_cache
    q = _quantiles_or_inf(np.abs(model.data.values - loo_mean), levels)
    m, _ = predict(model, x)
    return m[None, :] - q[:, None], m[None, :] + q[:, None], m


def jplus_bounds_sweep(model: FittedGP, x, levels):
    loo_mean, _ = model.loo_cache
    res = np.abs(model.data.values - loo_mean)
    preds, _ = loo_predict_all(model, x)
    lo_seq = np.sort(preds - res[:, None], axis=0)
    hi_seq = np.sort(preds + res[:, None], axis=0)
    ranks = np.array([jplus_ranks(model.n, a, strict=False) for a in levels])
    m, _ = predict(model, x)
    return _rank_lookup(lo_seq, ranks[:, 0]), _rank_lookup(hi_seq, ranks[:, 1]), m


def method_bounds(method: str, model: FittedGP, x, levels, cfg: ScoreConfig = ScoreConfig()):
    levels = np.asarray(levels, dtype=float)
    if method == "gaussian_reml":
        return gaussian_bounds(model, x, levels)
    if method == "jplus_gp":
        return jplus_gp_bounds(model, cfg, x, levels)
    if method == "asym_jplus_gp":
        return asym_jplus_gp_bounds(model, cfg, x, levels)
    if method == "fcp_gp":
        return fcp_gp_bounds(model, cfg, x, levels)
    if method == "scp":
        return scp_bounds(model, x, levels)
    if method == "jcp":
        return jcp_bounds(model, x, levels)
    if method == "jplus":
        return jplus_bounds_sweep(model, x, levels)
    raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
