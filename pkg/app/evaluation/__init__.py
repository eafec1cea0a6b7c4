"""
Offline evaluation: MAP, MACE and MRMC.
"""

from app.evaluation.metrics import (
    METRICS_HEADER,
    SERIES_HEADER,
    ace,
    aggregate,
    average_precision,
    evaluate_user,
    evaluate_users,
    lambda_order,
    lambda_series,
    metrics_frame,
    prefix_distributions,
    read_metrics,
    read_user_evaluations,
    rmc,
    write_metrics,
    write_user_evaluations,
)

__all__ = [
    "METRICS_HEADER",
    "SERIES_HEADER",
    "ace",
    "aggregate",
    "average_precision",
    "evaluate_user",
    "evaluate_users",
    "lambda_order",
    "lambda_series",
    "metrics_frame",
    "prefix_distributions",
    "read_metrics",
    "read_user_evaluations",
    "rmc",
    "write_metrics",
    "write_user_evaluations",
]
