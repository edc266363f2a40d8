"""LASSO estimation of spherical functional autoregressive kernels in the harmonic domain."""

__version__ = "0.1.0"

from .exceptions import ConvergenceError, DomainError, StationarityError
from .kernel import KernelEstimate, kernel_eval, l2_distance_sq, linf_distance, mse
from .lasso import LassoFit, MultipoleRegression, build_design, fit, fit_path, lasso_solve, soft_threshold
from .legendre import LegendreTable, gauss_legendre_nodes, legendre_eval, legendre_table
from .model import (
    SparsitySet,
    SpharModel,
    StabilityReport,
    characteristic_roots,
    deviation_scale,
    is_stationary,
    mu_extrema,
    oracle_bounds,
    spectral_density,
    stability_measure,
    stability_report,
)
from .simulate import HarmonicSample, SeedSpec, simulate_field, simulate_multipole, theoretical_autocovariance

__all__ = [
    "ConvergenceError",
    "DomainError",
    "HarmonicSample",
    "KernelEstimate",
    "LassoFit",
    "LegendreTable",
    "MultipoleRegression",
    "SeedSpec",
    "SparsitySet",
    "SpharModel",
    "StabilityReport",
    "StationarityError",
    "build_design",
    "characteristic_roots",
    "deviation_scale",
    "fit",
    "fit_path",
    "gauss_legendre_nodes",
    "is_stationary",
    "kernel_eval",
    "l2_distance_sq",
    "lasso_solve",
    "legendre_eval",
    "legendre_table",
    "linf_distance",
    "mse",
    "mu_extrema",
    "oracle_bounds",
    "simulate_field",
    "simulate_multipole",
    "soft_threshold",
    "spectral_density",
    "stability_measure",
    "stability_report",
    "theoretical_autocovariance",
]
