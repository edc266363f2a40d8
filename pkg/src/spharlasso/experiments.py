"""Simulation study driver: built-in models T1-T4, MSE tables and Monte Carlo diagnostics.

All randomness flows through ``SeedSpec`` streams keyed by replication index,
and per-replication results are reduced in index order, so outputs do not
depend on the number of worker threads.
"""

from __future__ import annotations

import csv
import json
import math
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy
from scipy.linalg import toeplitz

from . import __version__
from .exceptions import StationarityError
from .kernel import MSE_GRID, KernelEstimate, squared_error_on_grid, write_kernel_curves
from .lasso import SolverConfig, build_design, empirical_process_norm, fit_path
from .model import DEFAULT_NOISE_ALPHA, SpharModel, default_noise_spectrum, stability_report
from .simulate import DEFAULT_BURN_IN, SeedSpec, simulate_field, theoretical_autocovariance

BUILTIN_MODELS = ("T1", "T2", "T3", "T4")
DEFAULT_LAMBDAS = tuple(10.0 ** (i - 6) for i in range(1, 7))
BUILTIN_MARGIN = 0.01

# constants for the models whose coefficient values are only described qualitatively
T3_HEAD = (0.4, 0.2)
T3_TAIL_SCALE = 0.5
T3_CUTOFF = 20
T4_ROW = (0.4, 0.25)

_DEVIATION_TAG = 1
_RE_TAG = 2


def builtin_model(name: str, L: int = 50, noise_alpha: float = DEFAULT_NOISE_ALPHA) -> SpharModel:
    """One of the four SPHAR(2) case studies, truncated at L multipoles."""
    p = 2
    phi = np.zeros((L, p))
    meta: dict = {"name": name, "noise_alpha": noise_alpha}
    if name == "T1":
        if L < 4:
            raise ValueError("T1 needs L >= 4")
        phi[2, 0] = -0.7
        phi[3, 1] = 0.5
    elif name == "T2":
        if L < 33:
            raise ValueError("T2 needs L >= 33")
        for (ell, j), v in {(30, 1): -0.72, (31, 1): 0.31, (32, 1): 0.85,
                            (2, 2): 0.25, (3, 2): -0.87, (5, 2): -0.98}.items():
            phi[ell, j - 1] = v
    elif name == "T3":
        ell = np.arange(L)
        head = ell < T3_CUTOFF
        phi[head] = T3_HEAD
        tail = ~head
        phi[tail] = (T3_TAIL_SCALE * ell[tail].astype(float) ** -2)[:, None]
        meta.update(head=list(T3_HEAD), tail_scale=T3_TAIL_SCALE, cutoff=T3_CUTOFF)
    elif name == "T4":
        phi[:] = T4_ROW
        meta.update(row=list(T4_ROW))
    else:
        raise ValueError(f"unknown built-in model {name!r}; expected one of {BUILTIN_MODELS}")
    model = SpharModel(p, L, phi, default_noise_spectrum(L, noise_alpha), meta=meta)
    if not model.is_stationary(BUILTIN_MARGIN):
        raise StationarityError(f"built-in {name} violates the root margin {BUILTIN_MARGIN}")
    return model


def resolve_model(name_or_path: str, L: int = 50, noise_alpha: float = DEFAULT_NOISE_ALPHA) -> SpharModel:
    if name_or_path in BUILTIN_MODELS:
        return builtin_model(name_or_path, L, noise_alpha)
    return SpharModel.load(name_or_path)


@dataclass
class ExperimentConfig:
    model_name: str = "T1"
    N: int = 300
    L: int = 50
    B: int = 100
    G: int = MSE_GRID
    lambdas: list = field(default_factory=lambda: list(DEFAULT_LAMBDAS))
    noise_alpha: float = DEFAULT_NOISE_ALPHA
    burn_in: int = DEFAULT_BURN_IN
    master_seed: int = 20240101
    model_path: str | None = None
    threads: int = 1
    curve_replications: int = 5
    curve_grid: int = 201

    def __post_init__(self):
        if self.B < 1:
            raise ValueError("B must be >= 1")
        if any(lam < 0 for lam in self.lambdas):
            raise ValueError("penalties must be >= 0")
        if self.model_name not in BUILTIN_MODELS + ("custom",):
            raise ValueError(f"unknown model_name {self.model_name!r}")
        if self.model_name == "custom" and not self.model_path:
            raise ValueError("custom model requires model_path")

    def model(self) -> SpharModel:
        if self.model_name == "custom":
            return SpharModel.load(self.model_path)
        return builtin_model(self.model_name, self.L, self.noise_alpha)

    @property
    def all_lambdas(self) -> list[float]:
        return [0.0] + sorted(float(x) for x in self.lambdas if x != 0)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)


@dataclass
class MseTable:
    lambdas: list
    columns: dict
    per_kernel: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def merge(self, other: "MseTable") -> "MseTable":
        if list(self.lambdas) != list(other.lambdas):
            raise ValueError("cannot merge tables over different penalty grids")
        return MseTable(list(self.lambdas), {**self.columns, **other.columns},
                        {**self.per_kernel, **other.per_kernel}, {**self.metadata, **other.metadata})

    def to_csv(self, path) -> None:
        names = list(self.columns)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["lambda"] + names)
            for i, lam in enumerate(self.lambdas):
                w.writerow([repr(float(lam))] + [repr(float(self.columns[m][i])) for m in names])


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    truth: SpharModel
    table: MseTable
    phi_mean: np.ndarray  # (n_lambda, L, p)
    phi_reps: list  # per stored replication: (n_lambda, L, p)
    wall_clock: float


def _one_replication(model: SpharModel, config: ExperimentConfig, seeds: SeedSpec,
                     b: int, truth_k: KernelEstimate, solver: SolverConfig):
    sample = simulate_field(model, config.N + model.p, config.burn_in, seeds, b)
    fits = fit_path(sample, model.p, config.all_lambdas, solver)
    errors = np.array([squared_error_on_grid(KernelEstimate(f.phi_hat), truth_k, config.G)
                       for f in fits])
    return errors, np.stack([f.phi_hat for f in fits])


def _map_ordered(fn, items, threads: int):
    if threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def run_mse_experiment(config: ExperimentConfig, solver: SolverConfig = SolverConfig()) -> ExperimentResult:
    """Monte Carlo MSE of the kernel estimates for each penalty, lambda_0 = 0 first."""
    start = time.perf_counter()
    model = config.model()
    seeds = SeedSpec(config.master_seed)
    truth_k = KernelEstimate(model.phi)
    lambdas = config.all_lambdas

    def run(b):
        try:
            return _one_replication(model, config, seeds, b, truth_k, solver)
        except (ValueError, RuntimeError) as exc:
            raise type(exc)(f"replication {b}: {exc}") from exc

    outputs = _map_ordered(run, range(config.B), config.threads)
    err_sum = np.zeros((len(lambdas), model.p))
    phi_sum = np.zeros((len(lambdas), model.L, model.p))
    reps = []
    for b, (errors, phis) in enumerate(outputs):
        err_sum += errors
        phi_sum += phis
        if b < config.curve_replications:
            reps.append(phis)
    per_kernel = err_sum / config.B
    name = config.model_name if config.model_name != "custom" else Path(config.model_path).stem
    table = MseTable(lambdas, {name: per_kernel.sum(axis=1).tolist()}, {name: per_kernel.tolist()},
                     {name: {"config": config.to_dict(), "model_meta": model.meta}})
    return ExperimentResult(config, model, table, phi_sum / config.B, reps,
                            time.perf_counter() - start)


def _quantiles(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    return float(np.median(x)), float(np.quantile(x, 0.95))


def deviation_diagnostic(model: SpharModel, N_list, B: int, seeds: SeedSpec,
                         burn_in: int = DEFAULT_BURN_IN, threads: int = 1) -> list[dict]:
    """Scaled empirical-process sup-norms at the true coefficients, per sample size.

    For each replication the statistic is max_ell ||g - G phi_ell||_inf times
    sqrt(N / log(p L)); the scaled bound it is compared against is F_N.
    """
    log_pl = math.log(model.p * model.L)
    rows = []
    for N in N_list:
        sub = seeds.derive(_DEVIATION_TAG, N)
        scale = math.sqrt(N / log_pl)

        def run(b, N=N, sub=sub):
            sample = simulate_field(model, N + model.p, burn_in, sub, b)
            return [empirical_process_norm(build_design(sample, ell, model.p), model.phi[ell])
                    for ell in range(model.L)]

        per_ell = np.array(_map_ordered(run, range(B), threads)) * scale  # (B, L)
        per_rep = per_ell.max(axis=1)
        F_N = stability_report(model, N).F_N
        med, p95 = _quantiles(per_rep)
        med_all, p95_all = _quantiles(per_ell.ravel())
        rows.append({
            "N": int(N),
            "B": int(B),
            "median_max": med,
            "p95_max": p95,
            "median_all": med_all,
            "p95_all": p95_all,
            "F_N": F_N,
            "fraction_below_bound": float(np.mean(per_rep <= F_N)),
        })
    return rows


def re_diagnostic(model: SpharModel, N: int, B: int, seeds: SeedSpec,
                  burn_in: int = DEFAULT_BURN_IN, threads: int = 1) -> dict:
    """Smallest eigenvalues of the sample Gram matrices against the curvature alpha_ell."""
    report = stability_report(model, N)
    sub = seeds.derive(_RE_TAG, N)

    def run(b):
        sample = simulate_field(model, N + model.p, burn_in, sub, b)
        return [np.linalg.eigvalsh(build_design(sample, ell, model.p).gamma_hat_mat)[0]
                for ell in range(model.L)]

    emp = np.array(_map_ordered(run, range(B), threads))  # (B, L)
    alpha = report.alpha
    passed = emp > alpha[None, :]
    rows = []
    for ell in range(model.L):
        c_z = float(model.noise_spectrum[ell])
        gamma = theoretical_autocovariance(model.phi[ell], c_z, model.p - 1)
        exact = float(np.linalg.eigvalsh(toeplitz(gamma))[0])
        floor = c_z / report.mu_max[ell]
        rows.append({
            "ell": ell,
            "alpha": float(alpha[ell]),
            "floor": float(floor),
            "exact_min_eig": exact,
            "exact_above_floor": bool(exact >= floor * (1 - 1e-12)),
            "empirical_min": float(emp[:, ell].min()),
            "empirical_median": float(np.median(emp[:, ell])),
            "pass_fraction": float(passed[:, ell].mean()),
        })
    return {
        "N": int(N),
        "B": int(B),
        "all_multipoles_pass_fraction": float(passed.all(axis=1).mean()),
        "exact_floor_holds": all(r["exact_above_floor"] for r in rows),
        "multipoles": rows,
    }


def _write_rows(path: Path, rows: list[dict]) -> None:
    if not rows:
        return
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})


def emit_outputs(results, out_dir, deviation: list | None = None, re_check: dict | None = None) -> list[Path]:
    """Write tables, plot-ready kernel curves, diagnostics and a run manifest.

    Only the manifest carries a timestamp and wall-clock figures; every CSV is
    a deterministic function of the configs and seeds.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    results = list(results)
    written: list[Path] = []

    def target(name: str) -> Path:
        path = out / name
        written.append(path)
        return path

    try:
        if results:
            table = results[0].table
            for r in results[1:]:
                table = table.merge(r.table)
            table.to_csv(target("mse_table.csv"))

            diag_rows = []
            for r in results:
                name = next(iter(r.table.columns))
                truth_k = KernelEstimate(r.truth.phi)
                for i, lam in enumerate(r.table.lambdas):
                    write_kernel_curves(target(f"kernel_curves_{name}_lambda{i}.csv"), truth_k,
                                        KernelEstimate(r.phi_mean[i]), r.config.curve_grid)
                    for b, phis in enumerate(r.phi_reps):
                        write_kernel_curves(target(f"kernel_curves_{name}_lambda{i}_rep{b}.csv"),
                                            truth_k, KernelEstimate(phis[i]), r.config.curve_grid)
                report = stability_report(r.truth, r.config.N)
                diag_rows += [{"model": name, **row} for row in report.rows()]
            _write_rows(target("diagnostics.csv"), diag_rows)
        if deviation:
            _write_rows(target("deviation.csv"), deviation)
        if re_check:
            _write_rows(target("re_check.csv"), re_check["multipoles"])
    except OSError as exc:
        raise OSError(f"failed writing {written[-1] if written else out}: {exc}") from exc

    manifest = {
        "created": datetime.now(timezone.utc).isoformat(),
        "versions": {
            "spharlasso": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "runs": [
            {
                "model": next(iter(r.table.columns)),
                "config": r.config.to_dict(),
                "model_meta": r.truth.meta,
                "wall_clock_seconds": r.wall_clock,
            }
            for r in results
        ],
        "files": sorted(p.name for p in written),
    }
    if re_check:
        manifest["re_check"] = {k: v for k, v in re_check.items() if k != "multipoles"}
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2))
    written.append(path)
    return written
