"""Variability indexes and associated-kernel density estimation for orthant data."""

__version__ = "0.1.0"

from .data import Dataset, Divisor, MomentSummary, SupportKind, empirical_moments, load_csv, waterpumps
from .indexes import gdi, gvi, index_table, mdi, mvi, rdi, rvi, rwi
from .kernels import KernelFamily, KernelMoments, density, moments, numeric_moments, product_density
from .parametric import (
    ConstantOne,
    ExponentialProduct,
    GammaUniv,
    MarshallOlkin,
    correlation_bounds,
    fit_exponential_product,
    fit_gamma_mle,
    mo_gvi,
    mo_mvi,
    mo_sample,
)
from .estimators import (
    DensityEstimate,
    GlobalBandwidth,
    PerObservation,
    loo_at,
    nonparametric_at,
    normalizing_constant,
    semiparametric_at,
    weight_at,
)
from .bandwidth import (
    PriorSpec,
    adaptive_bayes_gamma_closed,
    adaptive_bayes_quadrature,
    cv_bandwidth,
    default_prior,
    global_bayes_1d,
    local_bayes,
)
from .diagnostics import Decision, DiagnosticReport, diagnose, log_weight_at

__all__ = [
    "__version__",
    "Dataset",
    "Divisor",
    "MomentSummary",
    "SupportKind",
    "empirical_moments",
    "load_csv",
    "waterpumps",
    "gdi",
    "gvi",
    "index_table",
    "mdi",
    "mvi",
    "rdi",
    "rvi",
    "rwi",
    "KernelFamily",
    "KernelMoments",
    "density",
    "moments",
    "numeric_moments",
    "product_density",
    "ConstantOne",
    "ExponentialProduct",
    "GammaUniv",
    "MarshallOlkin",
    "correlation_bounds",
    "fit_exponential_product",
    "fit_gamma_mle",
    "mo_gvi",
    "mo_mvi",
    "mo_sample",
    "DensityEstimate",
    "GlobalBandwidth",
    "PerObservation",
    "loo_at",
    "nonparametric_at",
    "normalizing_constant",
    "semiparametric_at",
    "weight_at",
    "PriorSpec",
    "adaptive_bayes_gamma_closed",
    "adaptive_bayes_quadrature",
    "cv_bandwidth",
    "default_prior",
    "global_bayes_1d",
    "local_bayes",
    "Decision",
    "DiagnosticReport",
    "diagnose",
    "log_weight_at",
]
