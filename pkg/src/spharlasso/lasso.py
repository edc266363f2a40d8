"""Per-multipole l1-penalised autoregression solved by cyclic coordinate descent.

For multipole ell with effective sample size N the estimator minimises

    (1 / (N (2 ell + 1))) ||Y - X phi||_2^2 + (lambda / N) ||phi||_1

which, written with the sample moments G = X'X / (N(2ell+1)) and
g = X'Y / (N(2ell+1)), is  y2 - 2 g'phi + phi'G phi + (lambda / N) ||phi||_1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ConvergenceError
from .simulate import HarmonicSample


@dataclass(frozen=True)
class MultipoleRegression:
    """Stacked regression objects for one multipole.

    Rows of ``X`` and ``Y`` run over m = -ell..ell and, within each m, over
    t = n down to p+1; column h of ``X`` holds the h-lagged values.
    """

    ell: int
    N: int
    X: np.ndarray
    Y: np.ndarray
    gamma_hat_mat: np.ndarray
    gamma_hat_vec: np.ndarray
    y_sq: float

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def rows(self) -> int:
        return self.X.shape[0]


def design_from_series(block: np.ndarray, ell: int, p: int) -> MultipoleRegression:
    block = np.asarray(block, dtype=float)
    count, n = block.shape
    if n <= p:
        raise ValueError(f"need more than p={p} time points, got n={n}")
    if count != 2 * ell + 1:
        raise ValueError(f"multipole {ell} needs {2 * ell + 1} series, got {count}")
    Y = block[:, p:][:, ::-1].reshape(-1)
    X = np.column_stack([block[:, p - h: n - h][:, ::-1].reshape(-1) for h in range(1, p + 1)])
    return regression_from_arrays(X, Y, ell, n - p)


def regression_from_arrays(X, Y, ell: int = 0, N: int | None = None) -> MultipoleRegression:
    """Wrap an explicit design; N defaults to rows / (2 ell + 1)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.asarray(Y, dtype=float).ravel()
    if X.shape[0] != Y.size:
        raise ValueError("X and Y must have the same number of rows")
    count = 2 * ell + 1
    if N is None:
        if X.shape[0] % count:
            raise ValueError("row count is not a multiple of 2*ell+1")
        N = X.shape[0] // count
    scale = float(N * count)
    G = X.T @ X / scale
    return MultipoleRegression(ell, int(N), X, Y, 0.5 * (G + G.T), X.T @ Y / scale, float(Y @ Y) / scale)


def build_design(sample: HarmonicSample, ell: int, p: int) -> MultipoleRegression:
    if not 0 <= ell < sample.L:
        raise IndexError(f"multipole {ell} outside 0..{sample.L - 1}")
    if p < 1:
        raise ValueError("p must be >= 1")
    return design_from_series(sample.series[ell], ell, p)


def soft_threshold(x: float, t: float) -> float:
    if t < 0:
        raise ValueError("threshold must be >= 0")
    if abs(x) <= t:
        return 0.0
    return math.copysign(abs(x) - t, x)


def objective(reg: MultipoleRegression, phi, lam: float) -> float:
    phi = np.asarray(phi, dtype=float)
    G, g = reg.gamma_hat_mat, reg.gamma_hat_vec
    return float(reg.y_sq - 2.0 * g @ phi + phi @ G @ phi + lam / reg.N * np.abs(phi).sum())


def kkt_residual(reg: MultipoleRegression, phi, lam: float) -> float:
    """Largest violation of the subgradient optimality conditions.

    Optimality reads 2 (g - G phi)_j = (lambda / N) s_j with s_j = sign(phi_j)
    on the support and |s_j| <= 1 off it.
    """
    phi = np.asarray(phi, dtype=float)
    grad = 2.0 * (reg.gamma_hat_vec - reg.gamma_hat_mat @ phi)
    t = lam / reg.N
    on = phi != 0
    viol = np.where(on, np.abs(grad - t * np.sign(phi)), np.maximum(np.abs(grad) - t, 0.0))
    return float(viol.max()) if viol.size else 0.0


def empirical_process_norm(reg: MultipoleRegression, phi_row) -> float:
    """||g - G phi||_inf, the sup-norm of the empirical process at ``phi_row``."""
    phi = np.asarray(phi_row, dtype=float)
    return float(np.max(np.abs(reg.gamma_hat_vec - reg.gamma_hat_mat @ phi)))


@dataclass
class SolveInfo:
    phi: np.ndarray
    sweeps: int
    objective: float
    kkt: float
    min_norm: bool = False
    history: list = field(default_factory=list)


def coordinate_descent(reg: MultipoleRegression, lam: float, tol: float = 1e-10,
                       max_sweeps: int = 100_000, init=None,
                       record_history: bool = False) -> SolveInfo:
    """Cyclic coordinate descent with exact soft-threshold coordinate updates.

    Stops once the largest coordinate change in a sweep is <= ``tol``.  With
    ``lam == 0`` and a singular Gram matrix the minimum-norm least-squares
    solution is returned instead and flagged.
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    p = reg.p
    G = reg.gamma_hat_mat
    if lam == 0:
        eig = np.linalg.eigvalsh(G)
        if eig[0] <= 1e-12 * max(eig[-1], 1e-300):
            phi = np.linalg.lstsq(G, reg.gamma_hat_vec, rcond=None)[0]
            return SolveInfo(phi, 0, objective(reg, phi, lam), kkt_residual(reg, phi, lam), True)

    Gl = G.tolist()
    g = reg.gamma_hat_vec.tolist()
    t = lam / (2.0 * reg.N)
    phi = [0.0] * p if init is None else [float(v) for v in init]
    history = [objective(reg, phi, lam)] if record_history else []
    for sweep in range(1, max_sweeps + 1):
        biggest = 0.0
        for j in range(p):
            gjj = Gl[j][j]
            if gjj <= 0.0:
                new = 0.0
            else:
                row = Gl[j]
                r = g[j] - sum(row[k] * phi[k] for k in range(p) if k != j)
                new = soft_threshold(r, t) / gjj
            biggest = max(biggest, abs(new - phi[j]))
            phi[j] = new
        if record_history:
            history.append(objective(reg, phi, lam))
        if biggest <= tol:
            out = np.array(phi)
            return SolveInfo(out, sweep, objective(reg, out, lam), kkt_residual(reg, out, lam),
                             history=history)
    raise ConvergenceError(
        f"coordinate descent did not reach tol={tol} within {max_sweeps} sweeps (ell={reg.ell})"
    )


def lasso_solve(reg: MultipoleRegression, lam: float, tol: float = 1e-10,
                max_sweeps: int = 100_000) -> np.ndarray:
    return coordinate_descent(reg, lam, tol, max_sweeps).phi


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-10
    max_sweeps: int = 100_000
    kkt_tolerance: float = 1e-6
    warm_start: bool = False


@dataclass
class LassoFit:
    phi_hat: np.ndarray
    lam: float
    diagnostics: list

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "phi_hat": np.asarray(self.phi_hat).tolist(),
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LassoFit":
        return cls(np.asarray(doc["phi_hat"], dtype=float), float(doc["lambda"]),
                   list(doc.get("diagnostics", [])))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path) -> "LassoFit":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _checked_solve(reg, lam, config, init=None) -> SolveInfo:
    try:
        info = coordinate_descent(reg, lam, config.tol, config.max_sweeps, init=init)
    except ConvergenceError as exc:
        raise ConvergenceError(f"multipole ell={reg.ell}, lambda={lam}: {exc}") from exc
    if not info.min_norm and info.kkt > config.kkt_tolerance:
        raise ConvergenceError(
            f"multipole ell={reg.ell}, lambda={lam}: KKT residual {info.kkt:.3e} "
            f"exceeds {config.kkt_tolerance:.1e}"
        )
    return info


def _diag(reg: MultipoleRegression, info: SolveInfo) -> dict:
    return {
        "ell": reg.ell,
        "sweeps": info.sweeps,
        "objective": info.objective,
        "kkt": info.kkt,
        "empirical_process_sup": empirical_process_norm(reg, info.phi),
        "min_norm": info.min_norm,
    }


def fit_path(sample_or_designs, p: int, lambdas, config: SolverConfig = SolverConfig()) -> list[LassoFit]:
    """Fit every multipole for each penalty in ``lambdas``, building designs once.

    Accepts either a HarmonicSample or a prebuilt list of MultipoleRegression.
    """
    if isinstance(sample_or_designs, HarmonicSample):
        designs = [build_design(sample_or_designs, ell, p) for ell in range(sample_or_designs.L)]
    else:
        designs = list(sample_or_designs)
    fits = []
    prev = [None] * len(designs)
    for lam in lambdas:
        phi_hat = np.zeros((len(designs), p))
        diagnostics = []
        for ell, reg in enumerate(designs):
            info = _checked_solve(reg, float(lam), config,
                                  init=prev[ell] if config.warm_start else None)
            phi_hat[ell] = info.phi
            prev[ell] = info.phi
            diagnostics.append(_diag(reg, info))
        fits.append(LassoFit(phi_hat, float(lam), diagnostics))
    return fits


def fit(sample: HarmonicSample, p: int, lam: float, config: SolverConfig = SolverConfig()) -> LassoFit:
    """LASSO estimate of the full coefficient table, one independent problem per multipole."""
    return fit_path(sample, p, [lam], config)[0]
