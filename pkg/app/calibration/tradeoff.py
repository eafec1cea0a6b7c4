"""
Relevance/calibration trade-offs and the per-user trade-off weight.

    LIN(L) = (1 - lambda) Sim(L) - lambda F(p, q~(L))
    LOG(L) = sign(LIN) log(|LIN| + 1) + b_u(L)

Sim(L) sums the predicted weights of the list. b_u(L) is the list's user
bias, built from the global mean and the item biases of the training data.
"""

import math
from typing import Iterable, Sequence

import numpy as np

from app.calibration.distributions import WeightedItems, realized_distribution, smooth
from app.calibration.divergence import divergence
from app.core.exceptions import CalibrationError
from app.core.logging import get_logger
from app.schemas.calibration import BiasParams, Distribution, LambdaPolicy, TradeOffSpec
from app.schemas.dataset import InteractionTable
from app.schemas.recommendation import CandidateItem

logger = get_logger(__name__)


def relevance_sum(list_items: Iterable[CandidateItem]) -> float:
    """Sim(L): total predicted weight, 0 for an empty list."""
    return float(sum(item.predicted_weight for item in list_items))


def lambda_var(p: Distribution) -> float:
    """1 - variance of p around its centre 1/|G|."""
    size = len(p.genres)
    centre = p.probs.sum() / size
    return float(1.0 - ((p.probs - centre) ** 2).sum() / size)


def lambda_cgr(prefs_genres: Iterable[str], universe: Sequence[str]) -> float:
    """Share of the genre universe touched by the user's profile."""
    if not universe:
        raise CalibrationError("genre universe is empty")
    return len(set(prefs_genres) & set(universe)) / len(universe)


def resolve_lambda(policy: LambdaPolicy, p: Distribution, prefs_genres: Iterable[str]) -> float:
    """Per-user trade-off weight under a policy."""
    if policy.kind == "var":
        return lambda_var(p)
    if policy.kind == "cgr":
        return lambda_cgr(prefs_genres, p.genres)
    return policy.value


def linear_balance(lambda_u: float, relevance: float, miscalibration: float) -> float:
    """(1 - lambda) relevance - lambda miscalibration."""
    return (1.0 - lambda_u) * relevance - lambda_u * miscalibration


def log_balance(t: float, user_bias_value: float, base: float = math.e) -> float:
    """sign(t) log_base(|t| + 1) + user bias; sign(0) = 0."""
    if t == 0:
        return user_bias_value
    return math.copysign(math.log(abs(t) + 1.0, base), t) + user_bias_value


def list_miscalibration(list_items: WeightedItems, p: Distribution, spec: TradeOffSpec) -> float:
    """F(p, q~(L)) under the trade-off's divergence, smoothing and distribution mode."""
    q = realized_distribution(list_items, p.genres, spec.distribution_mode)
    q_tilde = smooth(q, p, spec.smoothing)
    return divergence(spec.divergence, p, q_tilde, q)


def _check_lambda(lambda_u: float) -> None:
    if not 0.0 <= lambda_u <= 1.0:
        raise CalibrationError("trade-off weight must lie in [0, 1]", details={"lambda": lambda_u})


def tradeoff_lin(lambda_u: float, list_items: WeightedItems, p: Distribution, spec: TradeOffSpec) -> float:
    """
    Linear trade-off of a list.

    Args:
        lambda_u: Trade-off weight in [0, 1]; at 0 the divergence is not evaluated
        list_items: (item, predicted weight) pairs
        p: Target distribution of the user
        spec: Divergence, smoothing and distribution mode
    """
    _check_lambda(lambda_u)
    relevance = float(sum(w for _, w in list_items))
    if lambda_u == 0.0:
        return relevance
    return linear_balance(lambda_u, relevance, list_miscalibration(list_items, p, spec))


def item_bias(weights_on_item: Sequence[float], bp: BiasParams) -> float:
    """b_i = sum (w - mu) / (alpha_b + count), 0 for no feedback."""
    if len(weights_on_item) == 0:
        return 0.0
    return float(sum(w - bp.mu for w in weights_on_item) / (bp.alpha_b + len(weights_on_item)))


def user_bias(list_items: Sequence[CandidateItem], bp: BiasParams) -> float:
    """b_u(L) = sum_{i in L} (w^ - mu - b_i) / (sigma + |L|)."""
    total = sum(item.predicted_weight - bp.mu - bp.bias_of(item.item_id) for item in list_items)
    return float(total / (bp.sigma + len(list_items)))


def tradeoff_log(
    lambda_u: float,
    list_items: WeightedItems,
    p: Distribution,
    spec: TradeOffSpec,
    bp: BiasParams,
) -> float:
    """Logarithmic trade-off: the log-compressed linear value plus the list's user bias."""
    t = tradeoff_lin(lambda_u, list_items, p, spec)
    scored = [CandidateItem(item.item_id, float(w)) for item, w in list_items]
    return log_balance(t, user_bias(scored, bp), spec.log_base)


def objective(
    lambda_u: float,
    list_items: WeightedItems,
    p: Distribution,
    spec: TradeOffSpec,
    bp: BiasParams,
) -> float:
    """The trade-off selected by ``spec.balance``."""
    if spec.balance == "log":
        return tradeoff_log(lambda_u, list_items, p, spec, bp)
    return tradeoff_lin(lambda_u, list_items, p, spec)


def fit_bias_params(train: InteractionTable, alpha_b: float = 0.01, sigma: float = 0.01) -> BiasParams:
    """Global mean and item biases of a training table."""
    frame = train.interactions
    mu = float(frame["weight"].mean())
    base = BiasParams(mu=mu, alpha_b=alpha_b, sigma=sigma)
    biases = {
        item_id: item_bias(group.to_numpy(dtype=float).tolist(), base)
        for item_id, group in frame.groupby("item_id")["weight"]
    }
    logger.debug(f"Fitted {len(biases)} item biases around mu={mu:.4f}")
    return BiasParams(mu=mu, alpha_b=alpha_b, sigma=sigma, item_bias=biases)


def bias_vector(bp: BiasParams, item_ids: Sequence[str]) -> np.ndarray:
    """b_i for a sequence of items."""
    return np.array([bp.bias_of(item_id) for item_id in item_ids])
