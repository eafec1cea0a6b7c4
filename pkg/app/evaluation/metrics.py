"""
Offline evaluation of calibrated lists: AP, ACE and RMC per user, assessed
over every prefix 1..n, then averaged over users and repetitions.
"""

from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from app.calibration.distributions import genre_matrices, normalize_rows, raw_from_sums, target_distribution
from app.calibration.divergence import divergence_values
from app.core.exceptions import CalibrationError, EvaluationError, IngestError
from app.core.logging import get_logger
from app.schemas.calibration import Distribution, LambdaPolicy
from app.schemas.dataset import InteractionTable, ItemGenres
from app.schemas.evaluation import EvaluationConfig, SystemEvaluation, SystemId, UserEvaluation
from app.schemas.recommendation import RankedList

logger = get_logger(__name__)

USER_EVAL_HEADER = ["user_id", "ap", "ace", "rmc"]
SYSTEM_KEYS = ["recommender", "divergence", "balance", "lambda"]
METRICS_HEADER = SYSTEM_KEYS + ["repetition", "map", "mace", "mrmc"]
SERIES_HEADER = SYSTEM_KEYS + ["map", "mace", "mrmc"]


def _check_depth(ranked: RankedList, n: int) -> None:
    if n < 1:
        raise EvaluationError("evaluation depth must be at least 1", details={"n": n})
    if n > len(ranked):
        raise EvaluationError(
            "list shorter than evaluation depth",
            details={"user_id": ranked.user_id, "length": len(ranked), "n": n},
        )


def average_precision(ranked: RankedList, relevant: set[str], n: int) -> float:
    """
    AP@n = sum_k rel(k) precision@k / min(n, |relevant|).

    Returns 0 when ``relevant`` is empty.
    """
    _check_depth(ranked, n)
    if not relevant:
        return 0.0
    hits = 0
    total = 0.0
    for k, item_id in enumerate(ranked.item_ids[:n], start=1):
        if item_id in relevant:
            hits += 1
            total += hits / k
    return total / min(n, len(relevant))


def prefix_distributions(
    ranked: RankedList,
    p: Distribution,
    cfg: EvaluationConfig,
    catalog: Mapping[str, ItemGenres],
) -> tuple[np.ndarray, np.ndarray]:
    """
    Realized distributions of the prefixes 1..n.

    Returns:
        (q, q_tilde): arrays of shape (n, |G|), unsmoothed and smoothed
    """
    _check_depth(ranked, cfg.n)
    head = ranked.items[: cfg.n]
    weights = np.array([item.predicted_weight for item in head])
    if np.any(weights < 0):
        raise CalibrationError("weights must be finite and non-negative")
    probs, membership = genre_matrices([catalog[item.item_id] for item in head], p.genres)
    num = np.cumsum(weights[:, None] * probs, axis=0)
    if cfg.distribution_mode == "steck":
        den = np.cumsum(weights)
    else:
        den = np.cumsum(weights[:, None] * membership, axis=0)
    q = normalize_rows(raw_from_sums(num, den, cfg.distribution_mode))
    q_tilde = (1.0 - cfg.alpha) * q + cfg.alpha * p.probs
    return q, q_tilde


def ace(
    ranked: RankedList,
    p: Distribution,
    cfg: EvaluationConfig,
    catalog: Mapping[str, ItemGenres],
) -> float:
    """Mean over prefixes of the mean absolute genre deviation |p - q~@k|."""
    _, q_tilde = prefix_distributions(ranked, p, cfg, catalog)
    return float(np.abs(q_tilde - p.probs).mean(axis=1).mean())


def rmc(
    ranked: RankedList,
    p: Distribution,
    cfg: EvaluationConfig,
    catalog: Mapping[str, ItemGenres],
) -> float:
    """Mean over prefixes of divergence(eval_divergence, p, q~@k)."""
    q, q_tilde = prefix_distributions(ranked, p, cfg, catalog)
    return float(divergence_values(cfg.eval_divergence, p.probs, q_tilde, q).mean())


def evaluate_user(
    ranked: RankedList,
    relevant: set[str],
    p: Distribution,
    cfg: EvaluationConfig,
    catalog: Mapping[str, ItemGenres],
) -> UserEvaluation:
    q, q_tilde = prefix_distributions(ranked, p, cfg, catalog)
    return UserEvaluation(
        user_id=ranked.user_id,
        ap=average_precision(ranked, relevant, cfg.n),
        ace=float(np.abs(q_tilde - p.probs).mean(axis=1).mean()),
        rmc=float(divergence_values(cfg.eval_divergence, p.probs, q_tilde, q).mean()),
    )


def evaluate_users(
    rankings: Mapping[str, RankedList],
    train: InteractionTable,
    test: InteractionTable,
    cfg: EvaluationConfig,
) -> list[UserEvaluation]:
    """
    Evaluate every ranked list against the user's test items.

    The target distribution is built from the training profile. Users that
    have no test items or no calibratable profile are skipped with a warning.

    Raises:
        EvaluationError: If a list is shorter than ``cfg.n``
    """
    results = []
    for user_id in sorted(rankings):
        relevant = test.items_of(user_id)
        if not relevant:
            logger.warning(f"User {user_id} has no test items, skipping")
            continue
        profile = [(train.items[item_id], weight) for item_id, weight in train.profiles.get(user_id, [])]
        try:
            p = target_distribution(profile, train.genre_universe, cfg.distribution_mode)
        except CalibrationError as e:
            logger.warning(f"Skipping user {user_id}: {e}")
            continue
        results.append(evaluate_user(rankings[user_id], relevant, p, cfg, train.items))
    return results


def aggregate(repetitions: Sequence[Sequence[UserEvaluation]]) -> SystemEvaluation:
    """
    Mean over users within each repetition, then mean over repetitions.

    Raises:
        EvaluationError: If there are no repetitions or a repetition has no users
    """
    if not repetitions or any(len(users) == 0 for users in repetitions):
        raise EvaluationError("cannot aggregate an empty evaluation")
    per_rep = np.array(
        [[np.mean([getattr(u, metric) for u in users]) for metric in ("ap", "ace", "rmc")] for users in repetitions]
    )
    means = per_rep.mean(axis=0)
    return SystemEvaluation(
        map_mean=float(means[0]),
        mace_mean=float(means[1]),
        mrmc_mean=float(means[2]),
        users=max(len(users) for users in repetitions),
        repetitions=len(repetitions),
    )


def write_user_evaluations(evaluations: Sequence[UserEvaluation], path: Path) -> Path:
    """Per-user CSV ``user_id,ap,ace,rmc`` sorted by user."""
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = sorted((e.user_id, e.ap, e.ace, e.rmc) for e in evaluations)
    pd.DataFrame(rows, columns=USER_EVAL_HEADER).to_csv(path, index=False)
    return path


def read_user_evaluations(path: Path) -> list[UserEvaluation]:
    if not path.exists():
        raise FileNotFoundError(f"Evaluation file not found: {path}")
    frame = pd.read_csv(path, dtype={"user_id": str}, keep_default_na=False)
    if list(frame.columns) != USER_EVAL_HEADER:
        raise IngestError("unexpected evaluation header", details={"file": str(path)})
    return [UserEvaluation(str(u), float(a), float(c), float(r)) for u, a, c, r in frame.itertuples(index=False)]


def lambda_order(label: str) -> tuple[int, float, str]:
    """Sort key placing constants ascending, then var, then cgr, then pooled rows."""
    if label == "var":
        return (1, 0.0, label)
    if label == "cgr":
        return (2, 0.0, label)
    try:
        return (0, LambdaPolicy.parse(label).value, label)
    except CalibrationError:
        return (3, 0.0, label)


def _sorted_frame(frame: pd.DataFrame, keys: list[str]) -> pd.DataFrame:
    order = frame["lambda"].map(lambda_order)
    return (
        frame.assign(_lambda_key=order)
        .sort_values(["recommender", "divergence", "balance", "_lambda_key"] + keys, kind="mergesort")
        .drop(columns="_lambda_key")
        .reset_index(drop=True)
    )


def metrics_frame(records: Sequence[tuple[SystemId, int, SystemEvaluation]]) -> pd.DataFrame:
    """metrics.csv rows: one per (system, repetition), canonically sorted."""
    rows = [
        (
            system.recommender,
            system.divergence,
            system.balance,
            system.lambda_label or "",
            repetition,
            evaluation.map_mean,
            evaluation.mace_mean,
            evaluation.mrmc_mean,
        )
        for system, repetition, evaluation in records
    ]
    return _sorted_frame(pd.DataFrame(rows, columns=METRICS_HEADER), ["repetition"])


def write_metrics(frame: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    _sorted_frame(frame[METRICS_HEADER], ["repetition"]).to_csv(path, index=False)
    return path


def read_metrics(path: Path) -> pd.DataFrame:
    """
    Load a metrics CSV.

    Only ``recommender,divergence,balance,map,mace,mrmc`` are required;
    ``lambda`` defaults to ``ALL`` and ``repetition`` to 0.
    """
    if not path.exists():
        raise FileNotFoundError(f"Metrics file not found: {path}")
    frame = pd.read_csv(path, dtype={"recommender": str, "divergence": str, "balance": str, "lambda": str})
    missing = {"recommender", "divergence", "balance", "map", "mace", "mrmc"} - set(frame.columns)
    if missing:
        raise IngestError("metrics file lacks columns", details={"file": str(path), "missing": sorted(missing)})
    if "lambda" not in frame.columns:
        frame["lambda"] = "ALL"
    if "repetition" not in frame.columns:
        frame["repetition"] = 0
    frame["lambda"] = frame["lambda"].fillna("ALL").astype(str)
    return frame[METRICS_HEADER]


def lambda_series(frame: pd.DataFrame) -> pd.DataFrame:
    """
    Repetition-averaged MAP/MACE/MRMC per (recommender, divergence, balance, lambda).

    Rows are ordered along the lambda axis so each system reads as a curve.
    """
    if frame.empty:
        raise EvaluationError("no metrics to summarise")
    series = frame.groupby(SYSTEM_KEYS, sort=False, as_index=False)[["map", "mace", "mrmc"]].mean()
    return _sorted_frame(series[SERIES_HEADER], [])
