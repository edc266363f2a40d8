"""Kernel reconstruction from Legendre coefficients and functional error metrics.

Kernel j is k_j(z) = sum_ell phi_{ell;j} (2 ell + 1) / (4 pi) P_ell(z) on [-1, 1].
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from .exceptions import DomainError
from .legendre import LegendreTable, _recurrence, legendre_table

LINF_GRID = 2001
MSE_GRID = 2000


def equispaced_grid(size: int) -> np.ndarray:
    """``size`` equally spaced points on [-1, 1], both endpoints included."""
    if size < 2:
        raise ValueError("grid needs at least two points")
    return np.linspace(-1.0, 1.0, size)


@lru_cache(maxsize=32)
def _grid_table(max_degree: int, size: int) -> LegendreTable:
    return legendre_table(max_degree, equispaced_grid(size))


def _degree_weights(L: int) -> np.ndarray:
    return (2.0 * np.arange(L) + 1.0) / (4.0 * math.pi)


@lru_cache(maxsize=32)
def _basis(L: int, size: int) -> np.ndarray:
    # (size, L) matrix mapping coefficient columns to kernel values on the grid
    basis = (_grid_table(L - 1, size).values * _degree_weights(L)[:, None]).T
    basis.setflags(write=False)
    return basis


@dataclass(frozen=True)
class KernelEstimate:
    """Coefficient table of shape (L, p) defining p kernels."""

    phi: np.ndarray

    def __post_init__(self):
        phi = np.array(self.phi, dtype=float, copy=True)
        if phi.ndim != 2 or phi.shape[0] < 1 or phi.shape[1] < 1:
            raise ValueError("coefficient table must be a non-empty (L, p) matrix")
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)

    @property
    def L(self) -> int:
        return self.phi.shape[0]

    @property
    def p(self) -> int:
        return self.phi.shape[1]

    def values(self, z) -> np.ndarray:
        """Kernel values with shape (len(z), p)."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        if np.any(np.abs(z) > 1.0 + 1e-15):
            raise DomainError("kernel arguments must lie in [-1, 1]")
        P = _recurrence(self.L - 1, z)
        return (P.T * _degree_weights(self.L)) @ self.phi

    def grid_values(self, size: int) -> np.ndarray:
        return _basis(self.L, size) @ self.phi


def kernel_eval(est: KernelEstimate, j: int, z):
    """Evaluate kernel ``j`` (1-based) at ``z``."""
    if not 1 <= j <= est.p:
        raise IndexError(f"kernel index must be in 1..{est.p}, got {j}")
    out = est.values(z)[:, j - 1]
    return float(out[0]) if np.ndim(z) == 0 else out


def _difference(a: KernelEstimate, b: KernelEstimate) -> np.ndarray:
    if a.p != b.p:
        raise ValueError(f"autoregressive orders differ: {a.p} != {b.p}")
    L = max(a.L, b.L)
    diff = np.zeros((L, a.p))
    diff[: a.L] += a.phi
    diff[: b.L] -= b.phi
    return diff


def l2_distance_sq(a: KernelEstimate, b: KernelEstimate) -> float:
    """Squared L2([-1, 1]) distance, computed in the coefficient domain."""
    diff = _difference(a, b)
    deg = 2.0 * np.arange(diff.shape[0]) + 1.0
    return float(np.sum(diff**2 * deg[:, None]) / (8.0 * math.pi**2))


def _local_maxima(values: np.ndarray, count: int) -> np.ndarray:
    padded = np.concatenate(([-np.inf], values, [-np.inf]))
    peaks = np.flatnonzero((padded[1:-1] >= padded[:-2]) & (padded[1:-1] >= padded[2:]))
    return peaks[np.argsort(values[peaks])[::-1][:count]]


def _sup_norm(diff: np.ndarray, grid_size: int, refine: bool) -> tuple[float, np.ndarray]:
    """Return (sup of Euclidean norm, per-kernel sup of |.|) for a coefficient difference."""
    diff_k = KernelEstimate(diff)
    vals = diff_k.grid_values(grid_size)
    z = equispaced_grid(grid_size)
    norms = np.sqrt(np.sum(vals**2, axis=1))
    best = float(norms.max())
    if refine and best > 0:
        step = z[1] - z[0]

        def neg_norm(x):
            return -float(np.linalg.norm(diff_k.values(x)[0]))

        for i in _local_maxima(norms, 4):
            lo, hi = max(z[i] - step, -1.0), min(z[i] + step, 1.0)
            res = minimize_scalar(neg_norm, bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-12})
            best = max(best, -float(res.fun))
    return best, np.abs(vals).max(axis=0)


def linf_distance(a: KernelEstimate, b: KernelEstimate, grid_size: int = LINF_GRID,
                  refine: bool = True) -> float:
    """sup_z of the Euclidean norm of (k^a_j - k^b_j)(z), j = 1..p.

    The supremum is located on an equispaced grid and polished with a bounded
    scalar search around the largest grid peaks.
    """
    return _sup_norm(_difference(a, b), grid_size, refine)[0]


def linf_per_kernel(a: KernelEstimate, b: KernelEstimate, grid_size: int = LINF_GRID) -> np.ndarray:
    """Grid maximum of |k^a_j - k^b_j| for each kernel separately."""
    return _sup_norm(_difference(a, b), grid_size, refine=False)[1]


def squared_error_on_grid(est: KernelEstimate, truth: KernelEstimate,
                          grid_size: int = MSE_GRID) -> np.ndarray:
    """Per-kernel mean over the grid of (k_hat_j - k_j)^2, shape (p,)."""
    diff = _difference(est, truth)
    vals = _basis(diff.shape[0], grid_size) @ diff
    return np.mean(vals**2, axis=0)


class MseAccumulator:
    """Monte Carlo average of the grid-summed squared kernel error.

    The reported MSE is the sum over kernels of per-kernel averages over
    replications and grid points.
    """

    def __init__(self, truth: KernelEstimate, grid_size: int = MSE_GRID):
        self.truth = truth
        self.grid_size = grid_size
        self._sum = np.zeros(truth.p)
        self.count = 0

    def add(self, est: KernelEstimate) -> None:
        self._sum += squared_error_on_grid(est, self.truth, self.grid_size)
        self.count += 1

    @property
    def per_kernel(self) -> np.ndarray:
        if self.count == 0:
            raise ValueError("no replications accumulated")
        return self._sum / self.count

    @property
    def value(self) -> float:
        return float(np.sum(self.per_kernel))


def mse(estimates, truth: KernelEstimate, grid_size: int = MSE_GRID) -> float:
    acc = MseAccumulator(truth, grid_size)
    for est in estimates:
        acc.add(est)
    return acc.value


def write_kernel_curves(path, truth: KernelEstimate, est: KernelEstimate,
                        grid_size: int = 201) -> None:
    """CSV with columns z, k1_true, k1_hat, ..., kp_true, kp_hat."""
    if truth.p != est.p:
        raise ValueError("truth and estimate must share p")
    z = equispaced_grid(grid_size)
    kt, ke = truth.values(z), est.values(z)
    header = ["z"]
    for j in range(1, truth.p + 1):
        header += [f"k{j}_true", f"k{j}_hat"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for g in range(grid_size):
            row = [repr(float(z[g]))]
            for j in range(truth.p):
                row += [repr(float(kt[g, j])), repr(float(ke[g, j]))]
            w.writerow(row)
