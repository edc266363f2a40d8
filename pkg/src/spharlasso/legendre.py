"""Legendre polynomials by three-term recurrence, plus Gauss-Legendre quadrature."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError

_EDGE = 1e-15


def _check_grid(z: np.ndarray) -> None:
    if np.any(np.abs(z) > 1.0 + _EDGE) or np.any(~np.isfinite(z)):
        raise DomainError("Legendre arguments must lie in [-1, 1]")


def _recurrence(max_degree: int, z: np.ndarray) -> np.ndarray:
    # (l+1) P_{l+1} = (2l+1) z P_l - l P_{l-1}
    out = np.empty((max_degree + 1,) + z.shape)
    out[0] = 1.0
    if max_degree >= 1:
        out[1] = z
    for ell in range(1, max_degree):
        out[ell + 1] = ((2 * ell + 1) * z * out[ell] - ell * out[ell - 1]) / (ell + 1)
    return out


def legendre_eval(degree: int, z: float) -> float:
    """Return P_degree(z) for ``z`` in [-1, 1]."""
    if degree < 0:
        raise DomainError(f"degree must be >= 0, got {degree}")
    zz = np.asarray(z, dtype=float)
    _check_grid(zz)
    return float(_recurrence(degree, zz)[degree])


@dataclass(frozen=True)
class LegendreTable:
    """Values of P_0..P_max_degree on a fixed grid.

    ``values[ell, g]`` holds P_ell(grid[g]).
    """

    max_degree: int
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.grid.setflags(write=False)
        self.values.setflags(write=False)


def legendre_table(max_degree: int, grid) -> LegendreTable:
    if max_degree < 0:
        raise DomainError(f"max_degree must be >= 0, got {max_degree}")
    z = np.array(grid, dtype=float).ravel()
    _check_grid(z)
    return LegendreTable(max_degree, z, _recurrence(max_degree, z))


def _legendre_and_derivative(order: int, x: np.ndarray):
    p_prev = np.ones_like(x)
    p = x.copy()
    for ell in range(1, order):
        p_prev, p = p, ((2 * ell + 1) * x * p - ell * p_prev) / (ell + 1)
    # P'_n(x) = n (x P_n - P_{n-1}) / (x^2 - 1); nodes are interior so x^2 != 1
    dp = order * (x * p - p_prev) / (x * x - 1.0)
    return p, dp


def gauss_legendre_nodes(order: int, tol: float = 1e-14, max_iter: int = 100):
    """Nodes and weights of the ``order``-point Gauss-Legendre rule on [-1, 1].

    Roots of P_order are located by Newton iteration on the recurrence, started
    from the Chebyshev-like guesses cos(pi (i - 1/4) / (order + 1/2)).  The rule
    integrates polynomials of degree <= 2*order - 1 exactly.
    """
    if order < 1:
        raise DomainError(f"order must be >= 1, got {order}")
    if order == 1:
        return np.array([0.0]), np.array([2.0])
    i = np.arange(1, order + 1)
    x = np.cos(np.pi * (i - 0.25) / (order + 0.5))
    for _ in range(max_iter):
        p, dp = _legendre_and_derivative(order, x)
        step = p / dp
        x = x - step
        if np.max(np.abs(step)) <= tol:
            break
    _, dp = _legendre_and_derivative(order, x)
    weights = 2.0 / ((1.0 - x * x) * dp * dp)
    # ascending order, exact symmetry about 0
    x = x[::-1]
    weights = weights[::-1]
    x = 0.5 * (x - x[::-1])
    weights = 0.5 * (weights + weights[::-1])
    return x, weights
