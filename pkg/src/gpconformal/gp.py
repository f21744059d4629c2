"""Noise-free GP interpolation with an unknown constant mean.

The constant mean is estimated by generalized least squares and the
posterior variance includes the mean-estimation term (universal kriging).
Leave-one-out quantities are obtained from a single factorization: with

    Q = K^-1 - K^-1 1 1' K^-1 / (1' K^-1 1),   alpha = Q Z,

dropping observation i gives

    m_{-i}(x)   = m(x) - u_i(x) alpha_i / Q_ii
    s2_{-i}(x)  = s2(x) + u_i(x)^2 / Q_ii

where u(x) = Q k(x) + K^-1 1 / (1' K^-1 1). Both identities are exact
(block inverse of the bordered kriging system) and coincide with refitting
on the reduced dataset with the same hyperparameters.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import linalg, optimize
from scipy.linalg import lapack
from scipy.special import ndtri

from .errors import ConditioningError, DomainError
from .interval import PredictionInterval
from .kernel import DEFAULT_NUGGET, CovarianceSpec, cross_covariance, gram_matrix, matern_correlation


@dataclass(frozen=True, eq=False)
class Dataset:
    """Design points (n x d) and noise-free observations (n,)."""

    points: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.points, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        z = np.asarray(self.values, dtype=float).ravel()
        if x.ndim != 2 or x.shape[0] != z.shape[0]:
            raise DomainError(f"points {x.shape} and values {z.shape} do not match")
        x.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "points", x)
        object.__setattr__(self, "values", z)

    def __len__(self):
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def drop(self, i: int) -> "Dataset":
        keep = np.arange(len(self)) != i
        return Dataset(self.points[keep], self.values[keep])

    def append(self, x, z) -> "Dataset":
        x = np.asarray(x, dtype=float).reshape(1, self.dim)
        return Dataset(np.vstack([self.points, x]), np.append(self.values, z))

    def with_values(self, values) -> "Dataset":
        return Dataset(self.points, values)


class LooPrediction(NamedTuple):
    """Leave-one-out posterior mean and standard deviation (scalars or arrays)."""

    loo_mean: object
    loo_sd: object


def cholesky(K: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor; raises ConditioningError with the failing pivot."""
    L, info = lapack.dpotrf(K, lower=1, clean=1)
    if info > 0:
        raise ConditioningError(
            f"Gram matrix is not numerically positive definite (leading minor {info})",
            pivot=int(info),
        )
    if info < 0:
        raise DomainError(f"invalid argument {-info} to dpotrf")
    return L


@dataclass(frozen=True, eq=False)
class FittedGP:
    spec: CovarianceSpec
    data: Dataset
    nugget: float
    chol: np.ndarray
    mean_hat: float
    alpha_weights: np.ndarray
    # cached quantities for prediction and LOO
    kinv: np.ndarray = field(repr=False)
    kinv_one: np.ndarray = field(repr=False)
    one_kinv_one: float = field(repr=False)
    q_diag: np.ndarray = field(repr=False)
    loo_cache: LooPrediction = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.data)

    @property
    def gram(self) -> np.ndarray:
        return self.chol @ self.chol.T


def fit(spec: CovarianceSpec, data: Dataset, nugget: float = DEFAULT_NUGGET) -> FittedGP:
    """Condition the GP on ``data`` with the GLS estimate of the constant mean."""
    if data.dim != spec.dim:
        raise DomainError(f"data dimension {data.dim} does not match spec dimension {spec.dim}")
    if len(data) < 2:
        raise DomainError("at least two observations are required")
    K = gram_matrix(spec, data.points, nugget)
    L = cholesky(K)
    n = len(data)
    linv = linalg.solve_triangular(L, np.eye(n), lower=True)
    kinv = linv.T @ linv
    kinv_one = linalg.cho_solve((L, True), np.ones(n))
    s = float(kinv_one.sum())
    if not s > 0:
        raise ConditioningError("1' K^-1 1 is not positive")
    z = data.values
    mean_hat = float(kinv_one @ z) / s
    alpha = linalg.cho_solve((L, True), z - mean_hat)
    q_diag = np.diag(kinv) - kinv_one**2 / s
    if np.any(q_diag <= 0):
        raise ConditioningError("leave-one-out variances are not positive")
    # exact for the nugget convention k(x_i, x_i) = variance at prediction time
    loo_mean = z - alpha / q_diag
    loo_var = 1.0 / q_diag - nugget * spec.variance
    loo_sd = np.sqrt(np.maximum(loo_var, 0.0))
    for a in (L, alpha, kinv, kinv_one, q_diag, loo_mean, loo_sd):
        a.setflags(write=False)
    return FittedGP(
        spec=spec,
        data=data,
        nugget=nugget,
        chol=L,
        mean_hat=mean_hat,
        alpha_weights=alpha,
        kinv=kinv,
        kinv_one=kinv_one,
        one_kinv_one=s,
        q_diag=q_diag,
        loo_cache=LooPrediction(loo_mean, loo_sd),
    )


def _points(model: FittedGP, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    d = model.spec.dim
    single = x.ndim <= 1 and x.size == d
    if single:
        x = x.reshape(1, d)
    elif x.ndim == 1 and d == 1:
        x = x.reshape(-1, 1)
    if x.ndim != 2 or x.shape[1] != d:
        raise DomainError(f"expected points of dimension {d}, got shape {np.shape(x)}")
    return x, single


def _unwrap(a, single):
    return float(a[0]) if single else a


def _solves(model: FittedGP, kx: np.ndarray):
    """v = L^-1 k(x) and t = K^-1 k(x) by triangular solves."""
    v = linalg.solve_triangular(model.chol, kx, lower=True)
    t = linalg.solve_triangular(model.chol, v, lower=True, trans="T")
    return v, t


def _predict(model: FittedGP, x: np.ndarray):
    """Posterior mean, variance, cross-covariances k(x) (n x m) and K^-1 k(x)."""
    kx = cross_covariance(model.spec, model.data.points, x)
    mean = model.mean_hat + kx.T @ model.alpha_weights
    v, t = _solves(model, kx)
    c = model.kinv_one @ kx
    var = model.spec.variance - np.einsum("ij,ij->j", v, v) + (1.0 - c) ** 2 / model.one_kinv_one
    return mean, np.maximum(var, 0.0), kx, t


def predict(model: FittedGP, x) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and standard deviation at the rows of ``x``."""
    x, _ = _points(model, x)
    mean, var, _, _ = _predict(model, x)
    return mean, np.sqrt(var)


def posterior_mean(model: FittedGP, x):
    x, single = _points(model, x)
    mean, _, _, _ = _predict(model, x)
    return _unwrap(mean, single)


def posterior_sd(model: FittedGP, x):
    x, single = _points(model, x)
    _, var, _, _ = _predict(model, x)
    return _unwrap(np.sqrt(var), single)


def normal_quantiles(alpha) -> tuple:
    """Lower and upper standard-normal quantiles of a central level-alpha interval."""
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha <= 0) or np.any(alpha >= 1):
        raise DomainError("alpha must lie in (0, 1)")
    return ndtri((1.0 - alpha) / 2.0), ndtri((1.0 + alpha) / 2.0)


def gaussian_interval(model: FittedGP, x, alpha: float) -> PredictionInterval:
    """Central posterior interval m_n(x) +/- z_{(1+alpha)/2} sigma_n(x)."""
    ql, qu = normal_quantiles(alpha)
    x, _ = _points(model, x)
    if x.shape[0] != 1:
        raise DomainError("gaussian_interval expects a single point")
    m, s = predict(model, x)
    return PredictionInterval(float(m[0] + ql * s[0]), float(m[0] + qu * s[0]), float(alpha))


def loo_at_training(model: FittedGP) -> LooPrediction:
    """LOO means and sds at each training site (arrays of length n)."""
    return model.loo_cache


def loo_predict_all(model: FittedGP, x) -> tuple[np.ndarray, np.ndarray]:
    """LOO means and sds for every held-out index at every row of ``x``.

    Returns two (n, m) arrays; entry (i, j) is the prediction at x_j from
    the model refitted without observation i.
    """
    x, _ = _points(model, x)
    mean, var, kx, t = _predict(model, x)
    u = t - np.outer(model.kinv_one, model.kinv_one @ kx) / model.one_kinv_one
    u += (model.kinv_one / model.one_kinv_one)[:, None]
    qd = model.q_diag[:, None]
    loo_mean = mean[None, :] - u * (model.alpha_weights[:, None] / qd)
    loo_var = var[None, :] + u**2 / qd
    return loo_mean, np.sqrt(np.maximum(loo_var, 0.0))


def loo_predict(model: FittedGP, i: int, x) -> LooPrediction:
    """Prediction at ``x`` from the model that excludes observation ``i`` (0-based)."""
    if not 0 <= i < model.n:
        raise IndexError(f"index {i} out of range for {model.n} observations")
    x, single = _points(model, x)
    m, s = loo_predict_all(model, x)
    return LooPrediction(_unwrap(m[i], single), _unwrap(s[i], single))


def sample_prior(spec: CovarianceSpec, points, rng, size=None, mean=0.0, nugget=DEFAULT_NUGGET):
    """Draw GP sample values at ``points``; shape (m,) or (size, m)."""
    K = gram_matrix(spec, points, nugget)
    L = cholesky(K)
    m = K.shape[0]
    shape = (m,) if size is None else (size, m)
    eps = rng.standard_normal(shape)
    return mean + eps @ L.T


# ---------------------------------------------------------------------------
# REML


@dataclass(frozen=True)
class SearchConfig:
    """Multi-start settings for REML lengthscale selection."""

    n_starts: int = 8
    seed: int = 0
    max_iter: int = 600
    nugget: float = DEFAULT_NUGGET
    # optimisation box, in decades beyond the start box on each side
    bound_margin: float = 1.0


def _sq_diffs(points):
    diff = points[:, None, :] - points[None, :, :]
    return diff * diff


def _profiled_reml(log_rho, sq_diffs, z, p, nugget):
    """Negative profiled restricted log-likelihood and the profiled variance.

    ``sq_diffs`` holds the (n, n, d) squared coordinate differences.
    """
    n = z.shape[0]
    h = np.sqrt(sq_diffs @ np.exp(-2.0 * np.asarray(log_rho, float)))
    R = matern_correlation(h, p)
    R[np.diag_indices(n)] = 1.0 + nugget
    L = cholesky(R)
    r1 = linalg.cho_solve((L, True), np.ones(n))
    s = r1.sum()
    m = (r1 @ z) / s
    e = z - m
    quad = e @ linalg.cho_solve((L, True), e)
    sigma2 = quad / (n - 1)
    if not sigma2 > 0 or not s > 0:
        raise ConditioningError("degenerate restricted likelihood")
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    nll = 0.5 * ((n - 1) * np.log(sigma2) + logdet + np.log(s) + (n - 1) * (1.0 + np.log(2 * np.pi)))
    return nll, sigma2


def restricted_log_likelihood(spec: CovarianceSpec, data: Dataset, nugget: float = DEFAULT_NUGGET) -> float:
    """Restricted log-likelihood of ``data`` under the constant-mean model.

    -1/2 [ e' K^-1 e + log det K + log(1' K^-1 1) + (n - 1) log(2 pi) ],
    e = Z - m_hat 1.
    """
    n = len(data)
    K = gram_matrix(spec, data.points, nugget)
    L = cholesky(K)
    r1 = linalg.cho_solve((L, True), np.ones(n))
    s = r1.sum()
    e = data.values - (r1 @ data.values) / s
    quad = e @ linalg.cho_solve((L, True), e)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    return float(-0.5 * (quad + logdet + np.log(s) + (n - 1) * np.log(2 * np.pi)))


def profiled_reml_objective(data: Dataset, p: int, nugget: float = DEFAULT_NUGGET):
    """Return f(log_rho) -> (negative profiled REML, sigma2_hat) on standardized values."""
    scale = _value_scale(data.values)
    z = data.values / scale
    sq = _sq_diffs(data.points)

    def f(log_rho):
        nll, s2 = _profiled_reml(log_rho, sq, z, p, nugget)
        return nll, s2 * scale**2

    return f


def _value_scale(z):
    s = float(np.std(z))
    if not np.isfinite(s) or s <= 0:
        s = float(np.max(np.abs(z))) or 1.0
    # power of two keeps rescaled values bit-exact
    return 2.0 ** np.round(np.log2(s))


def reml_start_box(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n, d = points.shape
    rng_ = np.ptp(points, axis=0)
    rng_ = np.where(rng_ > 0, rng_, 1.0)
    lo = np.log(rng_ / (10.0 * n ** (1.0 / d)))
    hi = np.log(10.0 * rng_)
    return lo, hi


def reml_starts(points: np.ndarray, search: SearchConfig) -> np.ndarray:
    lo, hi = reml_start_box(points)
    rng = np.random.default_rng(search.seed)
    return rng.uniform(lo, hi, size=(search.n_starts, lo.shape[0]))


def reml_select(data: Dataset, p: int, search: SearchConfig | None = None) -> CovarianceSpec:
    """Select variance and lengthscales by restricted maximum likelihood.

    The variance is profiled out; log-lengthscales are optimized by
    bounded Nelder-Mead from several seeded starts. Observations are
    rescaled by a power of two before optimization.
    """
    search = search or SearchConfig()
    n, d = data.points.shape
    if n <= d + 1:
        raise DomainError(f"REML needs n > d + 1 observations, got n={n}, d={d}")
    lo, hi = reml_start_box(data.points)
    margin = search.bound_margin * np.log(10.0)
    bounds = list(zip(lo - margin, hi + margin))
    scale = _value_scale(data.values)
    z = data.values / scale
    sq = _sq_diffs(data.points)

    def objective(log_rho):
        try:
            return _profiled_reml(log_rho, sq, z, p, search.nugget)[0]
        except (ConditioningError, FloatingPointError):
            return np.inf

    best_x, best_f = None, np.inf
    for x0 in reml_starts(data.points, search):
        f0 = objective(x0)
        if not np.isfinite(f0):
            continue
        res = optimize.minimize(
            objective,
            x0,
            method="Nelder-Mead",
            bounds=bounds,
            options={"maxiter": search.max_iter * d, "xatol": 1e-3, "fatol": 1e-6},
        )
        x, fx = (res.x, res.fun) if res.fun <= f0 else (x0, f0)
        if fx < best_f:
            best_x, best_f = x, fx
    if best_x is None:
        raise ConditioningError("every REML start failed to factorize")
    _, sigma2 = _profiled_reml(best_x, sq, z, p, search.nugget)
    return CovarianceSpec(sigma2 * scale**2, np.exp(best_x), p)
