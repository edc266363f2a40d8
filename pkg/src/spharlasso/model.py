"""Generative SPHAR(p) model in the harmonic domain and its stability diagnostics.

A model is a table ``phi`` of shape (L, p) whose row ``ell`` holds the AR
coefficients shared by the 2*ell+1 harmonic coefficient series at multipole
``ell``, together with the noise angular power spectrum ``C_{ell;Z}``.

Unspecified absolute constants in the deviation and compatibility bounds are
fixed to 1 everywhere in this module.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .exceptions import DomainError, StationarityError

NU_GRID_SIZE = 4096
REFINE_XTOL = 1e-12
DENSITY_FLOOR = 1e-14
DEFAULT_NOISE_ALPHA = 2.5


def default_noise_spectrum(L: int, alpha: float = DEFAULT_NOISE_ALPHA) -> np.ndarray:
    """C_{ell;Z} = (1 + ell)^(-alpha) for ell = 0..L-1."""
    return (1.0 + np.arange(L)) ** (-float(alpha))


def _as_row(phi_row) -> np.ndarray:
    row = np.atleast_1d(np.asarray(phi_row, dtype=float))
    if row.ndim != 1:
        raise ValueError("coefficient row must be one-dimensional")
    return row


def effective_degree(phi_row) -> int:
    """Largest lag j with a nonzero coefficient (0 for an all-zero row)."""
    nz = np.flatnonzero(_as_row(phi_row))
    return int(nz[-1]) + 1 if nz.size else 0


def _reciprocal_roots(row: np.ndarray) -> np.ndarray:
    # eigenvalues of the companion of z^d - phi_1 z^{d-1} - ... - phi_d; always monic,
    # so tiny trailing coefficients cannot overflow the normalisation
    d = effective_degree(row)
    if d == 0:
        return np.empty(0, dtype=complex)
    companion = np.zeros((d, d))
    companion[0, :] = row[:d]
    companion[1:, :-1] = np.eye(d - 1)
    return np.linalg.eigvals(companion).astype(complex)


def characteristic_roots(phi_row) -> np.ndarray:
    """Roots of 1 - phi_1 z - ... - phi_d z^d, d the effective degree.

    Trailing zero lags are dropped so that no spurious roots at infinity appear.
    """
    w = _reciprocal_roots(_as_row(phi_row))
    out = np.full(w.shape, np.inf, dtype=complex)
    nz = w != 0
    out[nz] = 1.0 / w[nz]
    return out


def is_stationary(phi_row, margin: float = 0.0) -> bool:
    """True iff every characteristic root has modulus > 1 + margin."""
    if margin < 0:
        raise DomainError("margin must be >= 0")
    w = _reciprocal_roots(_as_row(phi_row))
    return bool(np.all(np.abs(w) * (1.0 + margin) < 1.0))


def transfer_modulus_sq(phi_row, nu) -> np.ndarray:
    """|phi_ell(e^{-i nu})|^2 evaluated at the frequencies ``nu``."""
    row = _as_row(phi_row)
    nu = np.asarray(nu, dtype=float)
    lags = np.arange(1, row.size + 1)
    value = 1.0 - np.exp(-1j * np.multiply.outer(nu, lags)) @ row
    return np.abs(value) ** 2


def spectral_density(phi_row, c_z: float, nu):
    """Spectral density (c_z / 2 pi) / |phi_ell(e^{-i nu})|^2 of one AR subprocess."""
    if c_z <= 0:
        raise DomainError("noise variance must be positive")
    denom = transfer_modulus_sq(phi_row, nu)
    if np.any(denom < DENSITY_FLOOR):
        raise StationarityError("transfer function vanishes on the unit circle (unit root)")
    out = c_z / (2.0 * math.pi) / denom
    return float(out) if np.ndim(out) == 0 else out


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_min(f, a: float, c: float, xtol: float = REFINE_XTOL) -> float:
    """Golden-section search for a minimum of ``f`` on [a, c]; returns the min value."""
    x1 = c - _INVPHI * (c - a)
    x2 = a + _INVPHI * (c - a)
    f1, f2 = f(x1), f(x2)
    while c - a > xtol:
        if f1 <= f2:
            c, x2, f2 = x2, x1, f1
            x1 = c - _INVPHI * (c - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INVPHI * (c - a)
            f2 = f(x2)
    return min(f1, f2, f(0.5 * (a + c)))


def _refine(f, grid: np.ndarray, values: np.ndarray, idx: int) -> float:
    step = grid[1] - grid[0]
    return min(_golden_min(f, grid[idx] - step, grid[idx] + step), float(values[idx]))


def mu_extrema(phi_row, grid_size: int = NU_GRID_SIZE) -> tuple[float, float]:
    """Min and max of |phi_ell(e^{-i nu})|^2 over nu in [-pi, pi].

    A uniform grid locates the extrema; golden-section search then refines each
    one within its grid bracket.
    """
    row = _as_row(phi_row)
    if not np.any(row):
        return 1.0, 1.0
    grid = np.linspace(-math.pi, math.pi, grid_size)
    values = transfer_modulus_sq(row, grid)
    lo = _refine(lambda x: float(transfer_modulus_sq(row, x)), grid, values, int(np.argmin(values)))
    hi = -_refine(lambda x: -float(transfer_modulus_sq(row, x)), grid, -values, int(np.argmax(values)))
    return lo, hi


def stability_measure(phi_row, c_z: float) -> float:
    """Maximum over frequencies of the subprocess spectral density."""
    if c_z <= 0:
        raise DomainError("noise variance must be positive")
    mu_min, _ = mu_extrema(phi_row)
    if mu_min < DENSITY_FLOOR:
        raise StationarityError("transfer function vanishes on the unit circle (unit root)")
    return c_z / (2.0 * math.pi) / mu_min


def deviation_scale(phi_row, c_z: float) -> float:
    """C_{ell;Z} * (1 + (1 + mu_max) / mu_min), with the leading constant set to 1."""
    mu_min, mu_max = mu_extrema(phi_row)
    return c_z * (1.0 + (1.0 + mu_max) / mu_min)


@dataclass(frozen=True)
class SpharModel:
    """Ground-truth SPHAR(p) specification truncated at L multipoles."""

    p: int
    L: int
    phi: np.ndarray
    noise_spectrum: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        phi = np.array(self.phi, dtype=float, copy=True)
        noise = np.array(self.noise_spectrum, dtype=float, copy=True).ravel()
        if self.p < 1 or self.L < 1:
            raise ValueError(f"need p >= 1 and L >= 1, got p={self.p}, L={self.L}")
        if phi.shape != (self.L, self.p):
            raise ValueError(f"phi must have shape ({self.L}, {self.p}), got {phi.shape}")
        if noise.shape != (self.L,):
            raise ValueError(f"noise_spectrum must have length {self.L}")
        if np.any(~np.isfinite(phi)) or np.any(~np.isfinite(noise)):
            raise ValueError("model entries must be finite")
        if np.any(noise <= 0):
            raise ValueError("noise spectrum must be strictly positive")
        for ell in range(self.L):
            if not is_stationary(phi[ell]):
                raise StationarityError(f"row ell={ell} has a characteristic root in the unit disk")
        phi.setflags(write=False)
        noise.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "noise_spectrum", noise)

    @property
    def is_identifiable(self) -> bool:
        """Some multipole carries a nonzero coefficient at the top lag p."""
        return bool(np.any(self.phi[:, -1] != 0))

    def sparsity(self) -> "SparsitySet":
        q = np.count_nonzero(self.phi, axis=1)
        return SparsitySet(q=q, q_max=int(q.max()))

    def min_root_modulus(self) -> float:
        mods = [np.abs(characteristic_roots(r)).min() for r in self.phi if np.any(r)]
        return float(min(mods)) if mods else math.inf

    def is_stationary(self, margin: float = 0.0) -> bool:
        return all(is_stationary(r, margin) for r in self.phi)

    def to_dict(self) -> dict:
        out = {
            "p": self.p,
            "L": self.L,
            "phi": self.phi.tolist(),
            "noise_spectrum": self.noise_spectrum.tolist(),
        }
        if self.meta:
            out["meta"] = self.meta
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "SpharModel":
        """Build a model from its JSON document.

        Accepts either a dense ``phi`` table or a ``phi_sparse`` list of
        ``{"ell", "j", "value"}`` entries (``j`` is 1-based).  A missing
        ``noise_spectrum`` falls back to (1 + ell)^-noise_alpha.
        """
        p, L = int(doc["p"]), int(doc["L"])
        if "phi" in doc:
            phi = np.asarray(doc["phi"], dtype=float).reshape(L, p)
        else:
            phi = np.zeros((L, p))
            for entry in doc.get("phi_sparse", []):
                ell, j = int(entry["ell"]), int(entry["j"])
                if not (0 <= ell < L and 1 <= j <= p):
                    raise ValueError(f"sparse entry out of range: ell={ell}, j={j}")
                phi[ell, j - 1] = float(entry["value"])
        if "noise_spectrum" in doc:
            noise = np.asarray(doc["noise_spectrum"], dtype=float)
        else:
            noise = default_noise_spectrum(L, doc.get("noise_alpha", DEFAULT_NOISE_ALPHA))
        return cls(p, L, phi, noise, meta=dict(doc.get("meta", {})))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path) -> "SpharModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class SparsitySet:
    q: np.ndarray
    q_max: int


@dataclass(frozen=True)
class StabilityReport:
    """Per-multipole stability quantities of a model at effective sample size N."""

    N: int
    p: int
    L: int
    noise_spectrum: np.ndarray
    M_f: np.ndarray
    mu_min: np.ndarray
    mu_max: np.ndarray
    alpha: np.ndarray
    F_ell: np.ndarray
    F_N: float
    omega_N: float
    tau: np.ndarray
    q: np.ndarray

    @property
    def lambda_threshold(self) -> float:
        """Smallest penalty for which the oracle inequalities are claimed."""
        return 4.0 * self.F_N * math.sqrt(math.log(self.p * self.L) / self.N)

    def rows(self) -> list[dict]:
        return [
            {
                "ell": ell,
                "C_Z": float(self.noise_spectrum[ell]),
                "q": int(self.q[ell]),
                "M_f": float(self.M_f[ell]),
                "mu_min": float(self.mu_min[ell]),
                "mu_max": float(self.mu_max[ell]),
                "alpha": float(self.alpha[ell]),
                "tau": float(self.tau[ell]),
                "F_ell": float(self.F_ell[ell]),
            }
            for ell in range(self.L)
        ]

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "p": self.p,
            "L": self.L,
            "F_N": self.F_N,
            "omega_N": self.omega_N,
            "lambda_threshold": self.lambda_threshold,
            "multipoles": self.rows(),
        }


def stability_report(model: SpharModel, N: int) -> StabilityReport:
    if N < 1:
        raise ValueError("N must be >= 1")
    ext = np.array([mu_extrema(r) for r in model.phi])
    mu_min, mu_max = ext[:, 0], ext[:, 1]
    c = model.noise_spectrum
    M_f = c / (2.0 * math.pi) / mu_min
    alpha = c / (2.0 * mu_max)
    F_ell = c * (1.0 + (1.0 + mu_max) / mu_min)
    omega = float(np.max(mu_max / mu_min))
    tau = alpha * max(omega**2, 1.0) * math.log(model.p * model.L) / N
    return StabilityReport(
        N=N,
        p=model.p,
        L=model.L,
        noise_spectrum=c,
        M_f=M_f,
        mu_min=mu_min,
        mu_max=mu_max,
        alpha=alpha,
        F_ell=F_ell,
        F_N=float(F_ell.max()),
        omega_N=omega,
        tau=tau,
        q=model.sparsity().q,
    )


class OracleBounds(NamedTuple):
    l2_bound: float
    linf_bound: float


def oracle_bound_values(q: Sequence[int], alpha: Sequence[float], lam: float,
                        l2_bias: float = 0.0, linf_bias: float = 0.0) -> OracleBounds:
    """Right-hand sides of the L2 (squared) and L-infinity oracle inequalities.

    ``q`` and ``alpha`` are indexed by multipole 0..L_N-1; the bias arguments are
    the truncation errors ||k - k_N||^2_{L2} and ||k - k_N||_{Linf}.
    """
    if lam < 0:
        raise DomainError("lambda must be >= 0")
    q = np.asarray(q, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    deg = 2.0 * np.arange(q.size) + 1.0
    l2 = 18.0 / math.pi**2 * lam**2 * float(np.sum(q / alpha**2 * deg)) + l2_bias
    linf = 3.0 / math.pi * lam * float(np.sum(np.sqrt(q) / alpha * deg)) + linf_bias
    return OracleBounds(l2, linf)


def oracle_bounds(model: SpharModel, truth: SpharModel, N: int, lam: float) -> OracleBounds:
    """Evaluate both oracle bounds for an estimator truncated at ``model.L``.

    Sparsity indices and curvatures come from the first ``model.L`` rows of
    ``truth``; rows of ``truth`` beyond that level form the truncation bias.
    """
    from .kernel import KernelEstimate, linf_distance

    if N < 1:
        raise ValueError("N must be >= 1")
    if truth.p != model.p:
        raise ValueError("model and truth must share the autoregressive order")
    L_N = min(model.L, truth.L)
    head = truth.phi[:L_N]
    q = np.count_nonzero(head, axis=1)
    mu_max = np.array([mu_extrema(r)[1] for r in head])
    alpha = truth.noise_spectrum[:L_N] / (2.0 * mu_max)
    tail = truth.phi.copy()
    tail[:L_N] = 0.0
    l2_bias = l2_tail(truth.phi, L_N)
    linf_bias = 0.0
    if np.any(tail):
        zero = KernelEstimate(np.zeros((1, truth.p)))
        linf_bias = linf_distance(KernelEstimate(tail), zero)
    return oracle_bound_values(q, alpha, lam, l2_bias, linf_bias)


def l2_tail(phi: np.ndarray, start: int) -> float:
    """Sum over ell >= start of ||phi_ell||^2 (2 ell + 1) / (8 pi^2)."""
    phi = np.asarray(phi, dtype=float)
    ell = np.arange(phi.shape[0])
    mask = ell >= start
    return float(np.sum(np.sum(phi[mask] ** 2, axis=1) * (2 * ell[mask] + 1)) / (8 * math.pi**2))
