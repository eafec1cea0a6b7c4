"""
Post-processing: greedy calibrated selection and its exhaustive oracle.
"""

from app.selection.greedy import (
    SelectionProblem,
    greedy_select,
    greedy_step_certificate,
    read_rankings,
    rerank_users,
    write_rankings,
)
from app.selection.oracle import (
    OracleComparison,
    brute_force_select,
    compare_with_oracle,
    greedy_to_optimal_ratio,
    random_problem,
)

__all__ = [
    "SelectionProblem",
    "greedy_select",
    "greedy_step_certificate",
    "read_rankings",
    "rerank_users",
    "write_rankings",
    "OracleComparison",
    "brute_force_select",
    "compare_with_oracle",
    "greedy_to_optimal_ratio",
    "random_problem",
]
