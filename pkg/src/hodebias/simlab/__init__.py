"""Simulation laboratory: data generators, experiments and report emission."""

from .experiment import (
    DEFAULT_ROSTER,
    GramModelConfig,
    KSReport,
    RatioCell,
    RatioRow,
    RatioTable,
    RegressionModelConfig,
    estimator_label,
    replicate_estimates,
    run_ks_study,
    run_ratio_experiment,
)
from .models import (
    GramModel,
    OracleSigma,
    RegressionModel,
    ar1_cov,
    dimension_for,
    gen_gaussian,
    gen_regression,
    oracle_sigma,
    sigma_from_spec,
    true_beta,
    true_beta_eta,
)
from .report import emit, from_json, load_json, render

__all__ = [
    "DEFAULT_ROSTER",
    "GramModel",
    "GramModelConfig",
    "KSReport",
    "OracleSigma",
    "RatioCell",
    "RatioRow",
    "RatioTable",
    "RegressionModel",
    "RegressionModelConfig",
    "ar1_cov",
    "dimension_for",
    "emit",
    "estimator_label",
    "from_json",
    "gen_gaussian",
    "gen_regression",
    "load_json",
    "oracle_sigma",
    "render",
    "replicate_estimates",
    "run_ks_study",
    "run_ratio_experiment",
    "sigma_from_spec",
    "true_beta",
    "true_beta_eta",
]
