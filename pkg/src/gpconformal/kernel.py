"""Anisotropic Matérn covariance with half-integer regularity.

The correlation uses the closed form available when nu = p + 1/2, so no
Bessel functions are needed. Distances are taken in scaled coordinates
x / rho.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial

import numpy as np

from .errors import DomainError

DEFAULT_NUGGET = 1e-10


@dataclass(frozen=True)
class CovarianceSpec:
    """Matérn hyperparameters.

    Attributes
    ----------
    variance : float
        Variance at origin (sigma^2).
    lengthscales : tuple of float
        One positive lengthscale per input dimension.
    regularity_p : int
        Regularity index; the Matérn smoothness is ``p + 1/2``.
    """

    variance: float
    lengthscales: tuple
    regularity_p: int = 2

    def __post_init__(self):
        ls = tuple(float(r) for r in np.atleast_1d(self.lengthscales))
        object.__setattr__(self, "lengthscales", ls)
        object.__setattr__(self, "variance", float(self.variance))
        if not self.variance > 0:
            raise DomainError(f"variance must be positive, got {self.variance}")
        if len(ls) == 0 or not all(r > 0 for r in ls):
            raise DomainError(f"lengthscales must be positive, got {ls}")
        if int(self.regularity_p) != self.regularity_p or self.regularity_p < 1:
            raise DomainError(f"regularity_p must be an integer >= 1, got {self.regularity_p}")
        object.__setattr__(self, "regularity_p", int(self.regularity_p))

    @property
    def dim(self) -> int:
        return len(self.lengthscales)

    @property
    def nu(self) -> float:
        return self.regularity_p + 0.5

    def with_variance(self, variance: float) -> "CovarianceSpec":
        return CovarianceSpec(variance, self.lengthscales, self.regularity_p)


@lru_cache(maxsize=None)
def _matern_coefficients(p: int) -> np.ndarray:
    # c_k multiplies (2 sqrt(2 nu) h)^(p - k); polynomial in descending powers
    return np.array(
        [
            float(Fraction(factorial(p) * factorial(p + k), factorial(2 * p) * factorial(k) * factorial(p - k)))
            for k in range(p + 1)
        ]
    )


def matern_correlation(h, p: int):
    """Half-integer Matérn correlation kappa_{p+1/2}(h).

    Accepts a scalar or an array of nonnegative distances and returns the
    same shape.
    """
    if int(p) != p or p < 1:
        raise DomainError(f"p must be an integer >= 1, got {p}")
    h = np.asarray(h, dtype=float)
    if np.any(h < 0) or np.any(np.isnan(h)):
        raise DomainError("distance must be nonnegative")
    c = np.sqrt(2.0 * (p + 0.5))
    t = 2.0 * c * h
    poly = np.polyval(_matern_coefficients(int(p)), t)
    out = np.exp(-c * h) * poly
    return float(out) if out.ndim == 0 else out


def _as_points(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x.reshape(1, -1) if x.shape[0] == dim else x.reshape(-1, 1)
    if x.ndim != 2 or x.shape[1] != dim:
        raise DomainError(f"expected points of dimension {dim}, got shape {np.shape(x)}")
    return x


def scaled_distances(spec: CovarianceSpec, x, y) -> np.ndarray:
    """Matrix of distances between rows of x and y in the x / rho metric."""
    rho = np.asarray(spec.lengthscales)
    xs = _as_points(x, spec.dim) / rho
    ys = _as_points(y, spec.dim) / rho
    diff = xs[:, None, :] - ys[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def covariance(spec: CovarianceSpec, x, y) -> float:
    """k(x, y) for two single points."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != (spec.dim,) or y.shape != (spec.dim,):
        raise DomainError(
            f"points must have dimension {spec.dim}, got {x.shape} and {y.shape}"
        )
    h = np.sqrt(np.sum(((x - y) / np.asarray(spec.lengthscales)) ** 2))
    return spec.variance * matern_correlation(h, spec.regularity_p)


def cross_covariance(spec: CovarianceSpec, x, y) -> np.ndarray:
    """Covariance matrix between point sets x (n x d) and y (m x d)."""
    return spec.variance * matern_correlation(scaled_distances(spec, x, y), spec.regularity_p)


def gram_matrix(spec: CovarianceSpec, points, nugget: float = DEFAULT_NUGGET) -> np.ndarray:
    """Symmetric Gram matrix with a relative nugget ``nugget * variance`` on the diagonal."""
    if nugget < 0:
        raise DomainError("nugget must be nonnegative")
    points = _as_points(points, spec.dim)
    K = cross_covariance(spec, points, points)
    K = 0.5 * (K + K.T)
    K[np.diag_indices_from(K)] = spec.variance * (1.0 + nugget)
    return K
