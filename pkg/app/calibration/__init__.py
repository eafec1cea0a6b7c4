"""
Calibration core: genre distributions, divergences and trade-off objectives.
"""

from app.calibration.distributions import (
    WeightedItems,
    genre_matrices,
    genre_prob,
    normalize_rows,
    raw_from_sums,
    realized_distribution,
    smooth,
    target_distribution,
)
from app.calibration.divergence import divergence, divergence_values
from app.calibration.tradeoff import (
    bias_vector,
    fit_bias_params,
    item_bias,
    lambda_cgr,
    lambda_var,
    linear_balance,
    list_miscalibration,
    log_balance,
    objective,
    relevance_sum,
    resolve_lambda,
    tradeoff_lin,
    tradeoff_log,
    user_bias,
)

__all__ = [
    "WeightedItems",
    "genre_matrices",
    "genre_prob",
    "normalize_rows",
    "raw_from_sums",
    "realized_distribution",
    "smooth",
    "target_distribution",
    "divergence",
    "divergence_values",
    "bias_vector",
    "fit_bias_params",
    "item_bias",
    "lambda_cgr",
    "lambda_var",
    "linear_balance",
    "list_miscalibration",
    "log_balance",
    "objective",
    "relevance_sum",
    "resolve_lambda",
    "tradeoff_lin",
    "tradeoff_log",
    "user_bias",
]
