"""
Greedy post-processing of candidate lists into calibrated top-N lists.

Starting from an empty list, each step scores the trade-off of the current
prefix plus every remaining candidate and appends the best one. Ties within
``TIE_TOLERANCE`` go to the earliest candidate in canonical order, i.e. the
higher predicted weight and then the smaller item id.

The per-step scoring is vectorized over candidates; ``greedy_step_certificate``
replays a list with the scalar objective from ``app.calibration``.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from app.calibration.distributions import genre_matrices, normalize_rows, raw_from_sums, target_distribution
from app.calibration.divergence import divergence_values
from app.calibration.tradeoff import bias_vector, objective, resolve_lambda
from app.core.exceptions import CalibrationError, IngestError, SelectionError
from app.core.logging import get_logger
from app.schemas.calibration import BiasParams, Distribution, TradeOffSpec
from app.schemas.dataset import InteractionTable, ItemGenres
from app.schemas.recommendation import CandidateItem, CandidateList, RankedList

logger = get_logger(__name__)

TIE_TOLERANCE = 1e-12
RANKINGS_HEADER = ["user_id", "rank", "item_id", "predicted_weight", "objective_after_step"]


@dataclass(frozen=True, eq=False)
class SelectionProblem:
    """One user's post-processing input."""
    candidates: CandidateList
    p: Distribution
    spec: TradeOffSpec
    bias: BiasParams
    catalog: Mapping[str, ItemGenres] = field(repr=False)
    n: int = 10
    lambda_u: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise SelectionError("list length must be at least 1", details={"n": self.n})
        if not 0.0 <= self.lambda_u <= 1.0:
            raise SelectionError("trade-off weight must lie in [0, 1]", details={"lambda": self.lambda_u})
        missing = [item_id for item_id in self.candidates.item_ids if item_id not in self.catalog]
        if missing:
            raise SelectionError(
                "candidate items missing from the genre catalogue",
                details={"user_id": self.candidates.user_id, "items": missing[:5]},
            )

    @property
    def size(self) -> int:
        """Length of the selected list."""
        return min(self.n, len(self.candidates))

    def weighted(self, items: Sequence[CandidateItem]) -> list[tuple[ItemGenres, float]]:
        return [(self.catalog[item.item_id], item.predicted_weight) for item in items]

    def value_of(self, items: Sequence[CandidateItem]) -> float:
        """Scalar objective of a list."""
        return objective(self.lambda_u, self.weighted(items), self.p, self.spec, self.bias)


def _pick(values: np.ndarray) -> int:
    """Position of the first value within tolerance of the maximum."""
    best = float(values.max())
    tolerance = TIE_TOLERANCE * max(1.0, abs(best))
    return int(np.flatnonzero(values >= best - tolerance)[0])


def greedy_select(prob: SelectionProblem) -> RankedList:
    """
    Build R* step by step.

    Args:
        prob: Candidates, target distribution, trade-off and list length

    Returns:
        RankedList in selection order with the objective after each step

    Raises:
        SelectionError: If there are no candidates
    """
    items = prob.candidates.items
    if not items:
        raise SelectionError("no candidates to select from", details={"user_id": prob.candidates.user_id})

    spec = prob.spec
    weights = np.array([item.predicted_weight for item in items])
    if prob.lambda_u > 0.0 and np.any(weights < 0):
        raise CalibrationError("weights must be finite and non-negative")
    probs, membership = genre_matrices([prob.catalog[item.item_id] for item in items], prob.p.genres)
    contrib_num = weights[:, None] * probs
    contrib_den = weights if spec.distribution_mode == "steck" else weights[:, None] * membership
    residual = weights - prob.bias.mu - bias_vector(prob.bias, [item.item_id for item in items])

    num = np.zeros(len(prob.p.genres))
    den = 0.0 if spec.distribution_mode == "steck" else np.zeros(len(prob.p.genres))
    relevance = 0.0
    residual_sum = 0.0
    remaining = np.arange(len(items))
    chosen: list[CandidateItem] = []
    trace: list[float] = []
    alpha = spec.smoothing.alpha
    log_scale = np.log(spec.log_base)

    for step in range(prob.size):
        rel = relevance + weights[remaining]
        values = (1.0 - prob.lambda_u) * rel
        if prob.lambda_u > 0.0:
            raw = raw_from_sums(num + contrib_num[remaining], den + contrib_den[remaining], spec.distribution_mode)
            q = normalize_rows(raw)
            q_tilde = (1.0 - alpha) * q + alpha * prob.p.probs
            values = values - prob.lambda_u * divergence_values(spec.divergence, prob.p.probs, q_tilde, q)
        if spec.balance == "log":
            user_bias = (residual_sum + residual[remaining]) / (prob.bias.sigma + step + 1)
            values = np.sign(values) * np.log1p(np.abs(values)) / log_scale + user_bias

        pick = _pick(values)
        k = int(remaining[pick])
        chosen.append(items[k])
        trace.append(float(values[pick]))
        num = num + contrib_num[k]
        den = den + contrib_den[k]
        relevance += weights[k]
        residual_sum += residual[k]
        remaining = np.delete(remaining, pick)

    return RankedList(user_id=prob.candidates.user_id, items=tuple(chosen), objective_trace=tuple(trace))


def greedy_step_certificate(prob: SelectionProblem, rank_list: RankedList) -> bool:
    """
    Replay a ranked list against the scalar objective.

    True iff every appended item is the tie-broken argmax over the candidates
    still remaining at that step.
    """
    if len(rank_list) != prob.size:
        return False
    by_id = {item.item_id: item for item in prob.candidates.items}
    prefix: list[CandidateItem] = []
    for item in rank_list.items:
        if item.item_id not in by_id or item != by_id[item.item_id]:
            return False
        used = {chosen.item_id for chosen in prefix}
        remaining = [c for c in prob.candidates.items if c.item_id not in used]
        values = np.array([prob.value_of(prefix + [c]) for c in remaining])
        if remaining[_pick(values)].item_id != item.item_id:
            return False
        prefix.append(item)
    return True


def rerank_users(
    candidate_lists: Mapping[str, CandidateList],
    train: InteractionTable,
    spec: TradeOffSpec,
    bias: BiasParams,
    n: int = 10,
) -> dict[str, RankedList]:
    """
    Calibrated top-n lists for every user with candidates.

    The target distribution comes from the user's training profile; the
    trade-off weight follows ``spec.lambda_policy``. Users whose profile or
    candidates cannot be calibrated are skipped with a warning.
    """
    result: dict[str, RankedList] = {}
    for user_id in sorted(candidate_lists):
        profile = [(train.items[item_id], weight) for item_id, weight in train.profiles.get(user_id, [])]
        try:
            p = target_distribution(profile, train.genre_universe, spec.distribution_mode)
            lambda_u = resolve_lambda(spec.lambda_policy, p, train.genres_touched(user_id))
            problem = SelectionProblem(
                candidates=candidate_lists[user_id],
                p=p,
                spec=spec,
                bias=bias,
                catalog=train.items,
                n=n,
                lambda_u=lambda_u,
            )
            result[user_id] = greedy_select(problem)
        except (CalibrationError, SelectionError) as e:
            logger.warning(f"Skipping user {user_id} under {spec.label}: {e}")
    logger.debug(f"Re-ranked {len(result)}/{len(candidate_lists)} users under {spec.label}")
    return result


def write_rankings(lists: Mapping[str, RankedList], path: Path) -> Path:
    """Persist ranked lists, one row per (user, rank)."""
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = []
    for user_id in sorted(lists):
        ranked = lists[user_id]
        trace = ranked.objective_trace or (float("nan"),) * len(ranked)
        for rank, (item, value) in enumerate(zip(ranked.items, trace), start=1):
            rows.append((user_id, rank, item.item_id, item.predicted_weight, value))
    pd.DataFrame(rows, columns=RANKINGS_HEADER).to_csv(path, index=False)
    return path


def read_rankings(path: Path) -> dict[str, RankedList]:
    """Inverse of ``write_rankings``."""
    if not path.exists():
        raise FileNotFoundError(f"Rankings file not found: {path}")
    frame = pd.read_csv(path, dtype={"user_id": str, "item_id": str}, keep_default_na=False)
    if list(frame.columns) != RANKINGS_HEADER:
        raise IngestError("unexpected rankings header", details={"file": str(path)})

    result: dict[str, RankedList] = {}
    for user_id, group in frame.sort_values(["user_id", "rank"], kind="mergesort").groupby("user_id", sort=True):
        result[user_id] = RankedList(
            user_id=user_id,
            items=tuple(
                CandidateItem(item_id, float(weight))
                for item_id, weight in zip(group["item_id"], group["predicted_weight"])
            ),
            objective_trace=tuple(float(v) for v in group["objective_after_step"]),
        )
    return result
