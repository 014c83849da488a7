"""Python bindings for the dgbr stable-prediction library."""

from ._dgbr import (
    DgbrError,
    Model,
    alpha_from_m,
    balancing_loss,
    binarize,
    default_hyper,
    derive_seed,
    exact_balancing_weights,
    expected_alpha,
    fit,
    generate_environment,
    imbalance_report,
    matched_baseline,
    max_imbalance,
    missing_pattern_count,
    risk_bound,
    rmse,
    sweep,
)

__all__ = [
    "DgbrError",
    "Model",
    "alpha_from_m",
    "balancing_loss",
    "binarize",
    "default_hyper",
    "derive_seed",
    "exact_balancing_weights",
    "expected_alpha",
    "fit",
    "generate_environment",
    "imbalance_report",
    "matched_baseline",
    "max_imbalance",
    "missing_pattern_count",
    "risk_bound",
    "rmse",
    "sweep",
]
