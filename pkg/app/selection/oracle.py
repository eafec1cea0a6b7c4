"""
Exhaustive verification oracle for small selection problems.
"""

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from app.core.exceptions import SelectionError
from app.core.logging import get_logger
from app.core.seeding import rng_for
from app.schemas.calibration import BiasParams, Distribution, LambdaPolicy, SmoothingParams, TradeOffSpec
from app.schemas.dataset import ItemGenres
from app.schemas.recommendation import CandidateItem, CandidateList
from app.selection.greedy import TIE_TOLERANCE, SelectionProblem, greedy_select

logger = get_logger(__name__)

MAX_ORACLE_CANDIDATES = 20
MAX_ORACLE_LENGTH = 5


def brute_force_select(prob: SelectionProblem) -> tuple[frozenset[str], float]:
    """
    Best size-n subset by exhaustive enumeration.

    Ties go to the lexicographically smallest sorted item-id tuple.

    Raises:
        SelectionError: If the instance exceeds 20 candidates or n > 5
    """
    items = prob.candidates.items
    if len(items) > MAX_ORACLE_CANDIDATES or prob.n > MAX_ORACLE_LENGTH:
        raise SelectionError(
            "instance too large for exhaustive search",
            details={"candidates": len(items), "n": prob.n},
        )
    if not items:
        raise SelectionError("no candidates to select from", details={"user_id": prob.candidates.user_id})

    best_ids: Optional[tuple[str, ...]] = None
    best_value = -np.inf
    for subset in itertools.combinations(items, prob.size):
        value = prob.value_of(list(subset))
        ids = tuple(sorted(item.item_id for item in subset))
        tolerance = TIE_TOLERANCE * max(1.0, abs(best_value)) if best_ids is not None else 0.0
        if best_ids is None or value > best_value + tolerance or (
            value >= best_value - tolerance and ids < best_ids
        ):
            best_ids, best_value = ids, value
    return frozenset(best_ids), float(best_value)


@dataclass(frozen=True)
class OracleComparison:
    """Greedy against exhaustive value on one instance."""
    seed: int
    greedy_value: float
    optimal_value: float

    @property
    def gap(self) -> float:
        return self.optimal_value - self.greedy_value

    @property
    def ratio(self) -> float:
        """greedy / optimal, NaN when the optimum is not positive."""
        if self.optimal_value <= 0:
            return float("nan")
        return self.greedy_value / self.optimal_value


def random_problem(
    seed: int,
    n_candidates: int = 8,
    n: int = 3,
    n_genres: int = 4,
    lambda_u: float = 0.5,
    divergence: str = "kl",
    balance: str = "lin",
) -> SelectionProblem:
    """A seeded synthetic instance: random genres, weights in [1, 5] and a Dirichlet target."""
    rng = rng_for(seed, "oracle")
    universe = tuple(f"g{k}" for k in range(n_genres))
    catalog = {}
    scored = []
    for k in range(n_candidates):
        size = int(rng.integers(1, min(3, n_genres) + 1))
        genres = rng.choice(n_genres, size=size, replace=False)
        item_id = f"i{k:02d}"
        catalog[item_id] = ItemGenres(item_id, frozenset(universe[g] for g in genres))
        scored.append(CandidateItem(item_id, float(np.round(rng.uniform(1.0, 5.0), 3))))
    draw = rng.dirichlet(np.ones(n_genres))
    p = Distribution(universe, draw / draw.sum())
    bias = BiasParams(
        mu=3.0,
        item_bias={item_id: float(rng.normal(0.0, 0.2)) for item_id in catalog},
    )
    spec = TradeOffSpec(
        balance=balance,
        divergence=divergence,
        lambda_policy=LambdaPolicy("constant", round(lambda_u, 1)),
        smoothing=SmoothingParams(0.01),
    )
    return SelectionProblem(
        candidates=CandidateList.from_scores(f"u{seed}", scored),
        p=p,
        spec=spec,
        bias=bias,
        catalog=catalog,
        n=n,
        lambda_u=lambda_u,
    )


def compare_with_oracle(seeds: Iterable[int], **problem_kwargs) -> list[OracleComparison]:
    """Run greedy and brute force on one random instance per seed."""
    results = []
    for seed in seeds:
        prob = random_problem(seed, **problem_kwargs)
        ranked = greedy_select(prob)
        _, optimal = brute_force_select(prob)
        results.append(OracleComparison(seed, prob.value_of(list(ranked.items)), optimal))
    return results


def greedy_to_optimal_ratio(comparisons: Sequence[OracleComparison]) -> dict[str, float]:
    """Summary of greedy/optimal ratios; instances with a non-positive optimum only count towards gaps."""
    if not comparisons:
        raise SelectionError("no oracle comparisons to summarise")
    ratios = np.array([c.ratio for c in comparisons])
    gaps = np.array([c.gap for c in comparisons])
    finite = ratios[np.isfinite(ratios)]
    summary = {
        "instances": float(len(comparisons)),
        "optimal_hits": float(np.sum(gaps <= 1e-9)),
        "ratio_min": float(finite.min()) if finite.size else float("nan"),
        "ratio_mean": float(finite.mean()) if finite.size else float("nan"),
        "gap_max": float(gaps.max()),
    }
    logger.info(
        f"Greedy vs optimum over {len(comparisons)} instances: "
        f"mean ratio {summary['ratio_mean']:.4f}, min ratio {summary['ratio_min']:.4f}, max gap {summary['gap_max']:.4g}"
    )
    return summary
