"""Gaussian sample paths of the harmonic coefficients a_{ell,m}(t).

Every (ell, m, replication) triple owns an independent Philox stream keyed from
the master seed, so a path never depends on how work is scheduled.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import toeplitz
from scipy.signal import lfilter, lfiltic

from .exceptions import StationarityError
from .model import SpharModel, is_stationary

DEFAULT_BURN_IN = 1000


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")

    def generator(self, ell: int, m: int, replication: int) -> np.random.Generator:
        """Counter-based stream for one harmonic coefficient series."""
        key = (int(ell), int(m) + int(ell), int(replication))
        seq = np.random.SeedSequence(int(self.master_seed), spawn_key=key)
        return np.random.Generator(np.random.Philox(seq))

    def derive(self, *keys: int) -> "SeedSpec":
        """An independent SeedSpec for a named sub-experiment."""
        seq = np.random.SeedSequence(int(self.master_seed), spawn_key=tuple(int(k) for k in keys))
        lo, hi = seq.generate_state(2, dtype=np.uint32)
        return SeedSpec(int(lo) | (int(hi) << 32))


@dataclass(frozen=True)
class HarmonicSample:
    """Harmonic coefficient series; ``series[ell]`` has shape (2*ell+1, n), row m+ell."""

    L: int
    n: int
    p: int
    series: tuple

    def __post_init__(self):
        if len(self.series) != self.L:
            raise ValueError(f"expected {self.L} multipoles, got {len(self.series)}")
        frozen = []
        for ell, block in enumerate(self.series):
            block = np.array(block, dtype=float)
            if block.shape != (2 * ell + 1, self.n):
                raise ValueError(f"series[{ell}] must have shape ({2 * ell + 1}, {self.n})")
            block.setflags(write=False)
            frozen.append(block)
        object.__setattr__(self, "series", tuple(frozen))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["ell", "m", "t", "value"])
            for ell, block in enumerate(self.series):
                for i in range(2 * ell + 1):
                    m = i - ell
                    for t in range(self.n):
                        w.writerow([ell, m, t + 1, repr(float(block[i, t]))])

    @classmethod
    def from_csv(cls, path, p: int = 0) -> "HarmonicSample":
        """Read the (ell, m, t, value) layout; ``p`` is not stored in CSV files."""
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        ell_col = data[:, 0].astype(int)
        m_col = data[:, 1].astype(int)
        t_col = data[:, 2].astype(int)
        L, n = int(ell_col.max()) + 1, int(t_col.max())
        series = [np.full((2 * ell + 1, n), np.nan) for ell in range(L)]
        for ell, m, t, v in zip(ell_col, m_col, t_col, data[:, 3]):
            series[ell][m + ell, t - 1] = v
        if any(np.isnan(b).any() for b in series):
            raise ValueError(f"{path}: incomplete (ell, m, t) grid")
        return cls(L, n, p, tuple(series))

    def to_binary(self, path) -> None:
        """Little-endian int64 header (L, n, p), then float64 values ordered ell, m, t."""
        with open(path, "wb") as fh:
            fh.write(struct.pack("<3q", self.L, self.n, self.p))
            for block in self.series:
                fh.write(np.ascontiguousarray(block, dtype="<f8").tobytes())

    @classmethod
    def from_binary(cls, path) -> "HarmonicSample":
        raw = Path(path).read_bytes()
        L, n, p = struct.unpack_from("<3q", raw, 0)
        values = np.frombuffer(raw, dtype="<f8", offset=24)
        if values.size != L * L * n:
            raise ValueError(f"{path}: expected {L * L * n} values, found {values.size}")
        series, pos = [], 0
        for ell in range(L):
            size = (2 * ell + 1) * n
            series.append(values[pos:pos + size].reshape(2 * ell + 1, n))
            pos += size
        return cls(L, n, p, tuple(series))

    def save(self, path) -> None:
        if str(path).endswith(".csv"):
            self.to_csv(path)
        else:
            self.to_binary(path)

    @classmethod
    def load(cls, path, p: int = 0) -> "HarmonicSample":
        if str(path).endswith(".csv"):
            return cls.from_csv(path, p=p)
        return cls.from_binary(path)


def theoretical_autocovariance(phi_row, c_z: float, max_lag: int) -> np.ndarray:
    """Autocovariances C(0..max_lag) of a stationary AR(p) with innovation variance c_z.

    Solves the Yule-Walker system for lags 0..p, then extends by the AR recursion.
    """
    row = np.atleast_1d(np.asarray(phi_row, dtype=float))
    if not is_stationary(row):
        raise StationarityError("autocovariance undefined for a non-stationary row")
    p = row.size
    A = np.eye(p + 1)
    for k in range(p + 1):
        for j in range(1, p + 1):
            A[k, abs(k - j)] -= row[j - 1]
    rhs = np.zeros(p + 1)
    rhs[0] = c_z
    if np.linalg.cond(A) > 1e12:
        raise StationarityError("Yule-Walker system is numerically singular (near unit root)")
    gamma = list(np.linalg.solve(A, rhs))
    for k in range(p + 1, max_lag + 1):
        gamma.append(sum(row[j - 1] * gamma[k - j] for j in range(1, p + 1)))
    return np.array(gamma[: max_lag + 1])


def simulate_multipole(phi_row, c_z: float, count: int, n: int, burn_in: int,
                       seeds: SeedSpec, ell: int, replication: int,
                       init: str = "zero") -> np.ndarray:
    """``count`` = 2*ell+1 independent AR(p) paths of length ``n`` sharing ``phi_row``.

    With ``init="zero"`` the recursion starts from a zero state and the first
    ``burn_in`` values are dropped.  ``init="stationary"`` instead draws the
    first p lags from the exact stationary law; it exists as a cross-check.
    """
    row = np.atleast_1d(np.asarray(phi_row, dtype=float))
    if count != 2 * ell + 1:
        raise ValueError(f"count must equal 2*ell+1 = {2 * ell + 1}, got {count}")
    if c_z <= 0:
        raise ValueError("innovation variance must be positive")
    if burn_in < 0 or n < 1:
        raise ValueError("need n >= 1 and burn_in >= 0")
    if not is_stationary(row):
        raise StationarityError(f"row ell={ell} is not stationary")
    if init not in ("zero", "stationary"):
        raise ValueError(f"unknown init {init!r}")

    total = n + burn_in
    sd = float(np.sqrt(c_z))
    a = np.concatenate(([1.0], -row))
    if init == "stationary":
        p = row.size
        chol = np.linalg.cholesky(toeplitz(theoretical_autocovariance(row, c_z, p - 1)))
    out = np.empty((count, n))
    for i in range(count):
        gen = seeds.generator(ell, i - ell, replication)
        if init == "stationary":
            past = chol @ gen.standard_normal(row.size)  # y_{-p}, ..., y_{-1}
            innov = sd * gen.standard_normal(total)
            zi = lfiltic([1.0], a, past[::-1])
            path, _ = lfilter([1.0], a, innov, zi=zi)
        else:
            innov = sd * gen.standard_normal(total)
            path = lfilter([1.0], a, innov) if np.any(row) else innov
        out[i] = path[burn_in:]
    return out


def simulate_field(model: SpharModel, n: int, burn_in: int = DEFAULT_BURN_IN,
                   seeds: SeedSpec | None = None, replication: int = 0,
                   init: str = "zero") -> HarmonicSample:
    seeds = seeds if seeds is not None else SeedSpec(0)
    series = tuple(
        simulate_multipole(model.phi[ell], float(model.noise_spectrum[ell]), 2 * ell + 1,
                           n, burn_in, seeds, ell, replication, init=init)
        for ell in range(model.L)
    )
    return HarmonicSample(model.L, n, model.p, series)
