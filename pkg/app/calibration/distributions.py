"""
Genre distributions of profiles and recommendation lists.

Both the target distribution p(g|u) and the realized distribution q(g|u)
use the same raw formula. In ``genre`` mode every genre has its own
denominator:

    raw(g) = sum_i 1(g in i) w_i p(g|i) / sum_i 1(g in i) w_i

so raw values do not sum to one and are renormalised. In ``steck`` mode the
denominator is the total weight of the list, which is already normalised.
"""

from typing import Sequence

import numpy as np

from app.core.exceptions import CalibrationError
from app.schemas.calibration import Distribution, DistributionMode, SmoothingParams
from app.schemas.dataset import ItemGenres

WeightedItems = Sequence[tuple[ItemGenres, float]]


def genre_prob(item: ItemGenres, g: str) -> float:
    """p(g|i): 1/|genres(i)| when g is one of the item's genres, else 0."""
    return 1.0 / len(item.genres) if g in item.genres else 0.0


def genre_matrices(items: Sequence[ItemGenres], universe: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    """
    Per-item genre rows over a universe.

    Returns:
        (probs, membership): probs[k, g] = p(g|i_k), membership[k, g] = 1(g in i_k)
    """
    column = {g: k for k, g in enumerate(universe)}
    membership = np.zeros((len(items), len(universe)))
    for row, item in enumerate(items):
        for g in item.genres:
            if g not in column:
                raise CalibrationError(
                    "item genre outside the universe",
                    details={"item_id": item.item_id, "genre": g},
                )
            membership[row, column[g]] = 1.0
    probs = membership / membership.sum(axis=1, keepdims=True).clip(min=1.0)
    return probs, membership


def raw_from_sums(
    numerator: np.ndarray,
    denominator: np.ndarray,
    mode: DistributionMode,
) -> np.ndarray:
    """
    Raw genre values from accumulated sums.

    ``numerator`` is sum_i w_i p(g|i); ``denominator`` is sum_i w_i 1(g in i)
    in genre mode and the scalar (or per-row) sum_i w_i in steck mode.
    Works on single vectors and on stacks of rows.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        if mode == "steck":
            total = np.asarray(denominator, dtype=float)
            if total.ndim < numerator.ndim:
                total = total[..., None]
            return np.where(total > 0, numerator / total, 0.0)
        return np.where(denominator > 0, numerator / denominator, 0.0)


def normalize_rows(raw: np.ndarray) -> np.ndarray:
    """Renormalise raw values to sum 1 along the last axis."""
    totals = raw.sum(axis=-1, keepdims=True)
    if np.any(totals <= 0):
        raise CalibrationError("user has no genre mass")
    return raw / totals


def _distribution(items: WeightedItems, universe: Sequence[str], mode: DistributionMode) -> Distribution:
    if not items:
        raise CalibrationError("cannot build a distribution from an empty list")
    weights = np.array([float(w) for _, w in items])
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise CalibrationError("weights must be finite and non-negative")

    probs, membership = genre_matrices([item for item, _ in items], universe)
    numerator = weights @ probs
    denominator = weights.sum() if mode == "steck" else weights @ membership
    raw = raw_from_sums(numerator, np.asarray(denominator), mode)
    return Distribution(tuple(universe), normalize_rows(raw), raw=raw)


def target_distribution(
    prefs: WeightedItems,
    universe: Sequence[str],
    mode: DistributionMode = "genre",
) -> Distribution:
    """
    p(g|u) of a preference profile.

    Args:
        prefs: (item, feedback weight) pairs of the user's profile
        universe: Ordered genre universe
        mode: ``genre`` (per-genre denominators) or ``steck`` (total weight)

    Raises:
        CalibrationError: "user has no genre mass" when every raw value is 0
    """
    return _distribution(prefs, universe, mode)


def realized_distribution(
    list_items: WeightedItems,
    universe: Sequence[str],
    mode: DistributionMode = "genre",
) -> Distribution:
    """q(g|u) of a recommendation list, weighting items by their predicted weight."""
    return _distribution(list_items, universe, mode)


def smooth(q: Distribution, p: Distribution, s: SmoothingParams) -> Distribution:
    """q~ = (1 - alpha) q + alpha p."""
    if not q.same_universe(p):
        raise CalibrationError("distributions use different genre universes")
    return Distribution(q.genres, (1.0 - s.alpha) * q.probs + s.alpha * p.probs)
