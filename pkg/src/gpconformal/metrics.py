"""Coverage, width, RMSE and the integrated absolute calibration error."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


def iae_grid(size: int = 99) -> np.ndarray:
    """``size`` equispaced levels strictly inside (0, 1)."""
    if size < 2:
        raise DomainError("IAE grid needs at least two levels")
    return np.arange(1, size + 1) / (size + 1)


@dataclass(frozen=True)
class MetricsRecord:
    coverage: float
    mean_width: float
    iae: float
    rmse: float
    level: float
    method: str
    seed: int


def _bounds(intervals):
    lo = np.array([iv.lower for iv in intervals], dtype=float)
    hi = np.array([iv.upper for iv in intervals], dtype=float)
    return lo, hi


def covered(lower, upper, truths) -> np.ndarray:
    """Elementwise membership in the closed intervals [lower, upper]."""
    truths = np.asarray(truths, dtype=float)
    return (np.asarray(lower) <= truths) & (truths <= np.asarray(upper))


def empirical_coverage(intervals, truths) -> float:
    truths = np.asarray(truths, dtype=float).ravel()
    if len(intervals) == 0 or len(intervals) != truths.size:
        raise DomainError("need equal, nonzero numbers of intervals and truths")
    lo, hi = _bounds(intervals)
    return float(np.mean(covered(lo, hi, truths)))


def mean_width(intervals) -> float:
    if len(intervals) == 0:
        raise DomainError("no intervals")
    lo, hi = _bounds(intervals)
    return float(np.mean(hi - lo))


def rmse(predictions, truths) -> float:
    predictions = np.asarray(predictions, dtype=float).ravel()
    truths = np.asarray(truths, dtype=float).ravel()
    if predictions.size == 0 or predictions.size != truths.size:
        raise DomainError("need equal, nonzero numbers of predictions and truths")
    return float(np.sqrt(np.mean((predictions - truths) ** 2)))


def iae(coverages, grid) -> float:
    """Trapezoidal integral of |delta_alpha - alpha| over [0, 1].

    ``coverages[j]`` is the empirical coverage at level ``grid[j]``. The
    grid is extended with delta = 0 at alpha = 0 and delta = 1 at alpha = 1.
    """
    grid = np.asarray(grid, dtype=float).ravel()
    coverages = np.asarray(coverages, dtype=float).ravel()
    if grid.size < 2 or grid.size != coverages.size:
        raise DomainError("grid and coverages must have the same length >= 2")
    if np.any(np.diff(grid) <= 0):
        raise DomainError("grid must be strictly increasing")
    if grid[0] <= 0 or grid[-1] >= 1:
        raise DomainError("grid levels must lie in (0, 1)")
    a = np.concatenate([[0.0], grid, [1.0]])
    d = np.concatenate([[0.0], coverages, [1.0]])
    f = np.abs(d - a)
    return float(np.sum(0.5 * (f[1:] + f[:-1]) * np.diff(a)))


def coverage_curve(lower, upper, truths) -> np.ndarray:
    """Coverage per level from (levels, points) bound arrays."""
    return np.mean(covered(lower, upper, np.asarray(truths)[None, :]), axis=1)
