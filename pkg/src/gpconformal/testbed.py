"""Benchmark functions and seeded uniform designs.

Formulas and domains follow the usual published forms:

- Goldstein-Price on [-2, 2]^2, minimum 3 at (0, -1).
- Branin on [-5, 10] x [0, 15], minimum 0.397887 at (pi, 2.275).
- Hartmann6 on [0, 1]^6: -sum_i a_i exp(-sum_j A_ij (x_j - P_ij)^2).
- Hartmann4 on [0, 1]^4: rescaled form (1.1 - sum_i a_i exp(...)) / 0.839
  using the first four columns of the Hartmann6 constants.
- Park (1991) function on [0, 1]^4.
- Becker: a fixed two-dimensional metafunction instance on [-pi, pi]^2,
  c1 g_sin(x1) + c2 g_exp(x2) + c12 g_sin(x1) g_exp(x2). The benchmark
  family is random; this instance is a stand-in and comparisons on it are
  qualitative only.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class TestFunction:
    name: str
    dim: int
    domain: np.ndarray  # (d, 2) array of [low, high] rows
    func: Callable[[np.ndarray], np.ndarray]

    __test__ = False  # not a pytest class

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        if x.shape[1] != self.dim:
            raise DomainError(f"{self.name} expects {self.dim}-d points, got {x.shape}")
        y = self.func(x)
        return float(y[0]) if single else y


def goldstein_price(x):
    x1, x2 = x[:, 0], x[:, 1]
    a = 1 + (x1 + x2 + 1) ** 2 * (19 - 14 * x1 + 3 * x1**2 - 14 * x2 + 6 * x1 * x2 + 3 * x2**2)
    b = 30 + (2 * x1 - 3 * x2) ** 2 * (18 - 32 * x1 + 12 * x1**2 + 48 * x2 - 36 * x1 * x2 + 27 * x2**2)
    return a * b


def branin(x):
    x1, x2 = x[:, 0], x[:, 1]
    b = 5.1 / (4 * np.pi**2)
    c = 5 / np.pi
    t = 1 / (8 * np.pi)
    return (x2 - b * x1**2 + c * x1 - 6) ** 2 + 10 * (1 - t) * np.cos(x1) + 10


_HART_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
_HART_A = np.array(
    [
        [10, 3, 17, 3.5, 1.7, 8],
        [0.05, 10, 17, 0.1, 8, 14],
        [3, 3.5, 1.7, 10, 17, 8],
        [17, 8, 0.05, 10, 0.1, 14],
    ]
)
_HART_P = 1e-4 * np.array(
    [
        [1312, 1696, 5569, 124, 8283, 5886],
        [2329, 4135, 8307, 3736, 1004, 9991],
        [2348, 1451, 3522, 2883, 3047, 6650],
        [4047, 8828, 8732, 5743, 1091, 381],
    ]
)


def _hartmann_sum(x, d):
    diff = x[:, None, :] - _HART_P[None, :, :d]
    inner = np.sum(_HART_A[None, :, :d] * diff**2, axis=2)
    return np.exp(-inner) @ _HART_ALPHA


def hartmann6(x):
    return -_hartmann_sum(x, 6)


def hartmann4(x):
    return (1.1 - _hartmann_sum(x, 4)) / 0.839


def park(x):
    x1, x2, x3, x4 = x.T
    return x1 / 2 * (np.sqrt(1 + (x2 + x3**2) * x4 / x1**2) - 1) + (x1 + 3 * x4) * np.exp(
        1 + np.sin(x3)
    )


_BECKER_C = (0.6, 0.4, 0.3)


def becker2d(x):
    g1 = np.sin(x[:, 0])
    g2 = (np.exp(x[:, 1] / np.pi) - 1) / (np.e - 1)
    c1, c2, c12 = _BECKER_C
    return c1 * g1 + c2 * g2 + c12 * g1 * g2


def _box(*rows):
    return np.array(rows, dtype=float)


FUNCTIONS = {
    "goldstein_price": TestFunction("goldstein_price", 2, _box([-2, 2], [-2, 2]), goldstein_price),
    "branin": TestFunction("branin", 2, _box([-5, 10], [0, 15]), branin),
    "hartmann4": TestFunction("hartmann4", 4, _box(*[[0, 1]] * 4), hartmann4),
    "hartmann6": TestFunction("hartmann6", 6, _box(*[[0, 1]] * 6), hartmann6),
    "park": TestFunction("park", 4, _box(*[[0, 1]] * 4), park),
    "becker2d": TestFunction("becker2d", 2, _box([-np.pi, np.pi], [-np.pi, np.pi]), becker2d),
}


def get_function(name: str) -> TestFunction:
    try:
        return FUNCTIONS[name]
    except KeyError:
        raise DomainError(f"unknown test function {name!r}; choose from {sorted(FUNCTIONS)}") from None


def sample_uniform(domain, n: int, seed) -> np.ndarray:
    """``n`` points drawn uniformly in the open box ``domain`` (d x 2)."""
    if n < 1:
        raise DomainError("n must be at least 1")
    domain = np.asarray(domain, dtype=float)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    lo, hi = domain[:, 0], domain[:, 1]
    u = rng.random((n, domain.shape[0]))
    # rng.random is in [0, 1); reject the zero endpoint
    while np.any(u == 0):
        u[u == 0] = rng.random(np.count_nonzero(u == 0))
    return lo + u * (hi - lo)
