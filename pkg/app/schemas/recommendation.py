"""
Recommendation schemas: recommender settings, scored candidates and final lists.
"""

import math
from dataclasses import dataclass, field
from typing import Iterable, Literal, Optional

from pydantic import BaseModel, Field, model_validator

from app.core.exceptions import RecommenderError, SelectionError

Algorithm = Literal["user_knn", "item_knn", "slope_one", "funk_svd", "external"]
Similarity = Literal["msd", "pearson"]


class RecommenderConfig(BaseModel):
    """Settings of one recommender in the experiment grid."""

    name: str = Field(..., description="Label used in output files and decision tables")
    algorithm: Algorithm = Field(..., description="Built-in algorithm, or external predictions")
    k_neighbors: int = Field(default=30, ge=1, description="Neighbourhood size for KNN")
    similarity: Similarity = Field(default="msd", description="KNN similarity measure")
    factors: int = Field(default=50, ge=1, description="Latent factors (funk_svd)")
    epochs: int = Field(default=50, ge=1, description="SGD epochs (funk_svd)")
    learn_rate: float = Field(default=0.005, gt=0, description="SGD learning rate (funk_svd)")
    reg: float = Field(default=0.01, ge=0, description="L2 regularisation (funk_svd)")
    init_std: float = Field(default=0.1, ge=0, description="Std of factor initialisation (funk_svd)")
    rating_bounds: Optional[tuple[float, float]] = Field(
        default=None, description="Prediction clamp; derived from the domain when unset"
    )
    candidate_size: int = Field(default=100, ge=1, description="Candidates handed to post-processing")
    predictions_path: Optional[str] = Field(default=None, description="External predictions CSV")
    seed: int = Field(default=0, description="Seed of factor initialisation")

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def _check(self) -> "RecommenderConfig":
        if self.rating_bounds is not None and not self.rating_bounds[0] < self.rating_bounds[1]:
            raise ValueError(f"rating_bounds min must be below max, got {self.rating_bounds}")
        if self.algorithm == "external" and not self.predictions_path:
            raise ValueError("external recommenders need predictions_path")
        return self


@dataclass(frozen=True)
class CandidateItem:
    """An unknown item with its predicted weight."""
    item_id: str
    predicted_weight: float

    def __post_init__(self):
        if not math.isfinite(self.predicted_weight):
            raise RecommenderError(
                "predicted weight must be finite",
                details={"item_id": self.item_id, "predicted_weight": self.predicted_weight},
            )


def candidate_order(item: CandidateItem) -> tuple[float, str]:
    """Sort key: descending predicted weight, then ascending item id."""
    return (-item.predicted_weight, item.item_id)


@dataclass(frozen=True)
class CandidateList:
    """Per-user candidates ordered by (-predicted_weight, item_id)."""
    user_id: str
    items: tuple[CandidateItem, ...]

    def __post_init__(self):
        ids = [item.item_id for item in self.items]
        if len(set(ids)) != len(ids):
            raise RecommenderError("duplicate candidate items", details={"user_id": self.user_id})
        keys = [candidate_order(item) for item in self.items]
        if any(a >= b for a, b in zip(keys, keys[1:])):
            raise RecommenderError("candidate list is not in canonical order", details={"user_id": self.user_id})

    @classmethod
    def from_scores(
        cls,
        user_id: str,
        scored: Iterable[CandidateItem],
        limit: Optional[int] = None,
    ) -> "CandidateList":
        """Order scored items canonically and keep the first ``limit``."""
        ordered = sorted(scored, key=candidate_order)
        if limit is not None:
            ordered = ordered[:limit]
        return cls(user_id=user_id, items=tuple(ordered))

    def __len__(self) -> int:
        return len(self.items)

    @property
    def item_ids(self) -> list[str]:
        return [item.item_id for item in self.items]


@dataclass(frozen=True)
class RankedList:
    """Final recommendation list in selection order with the objective after each step."""
    user_id: str
    items: tuple[CandidateItem, ...]
    objective_trace: tuple[float, ...] = field(default=())

    def __post_init__(self):
        ids = [item.item_id for item in self.items]
        if len(set(ids)) != len(ids):
            raise SelectionError("duplicate items in ranked list", details={"user_id": self.user_id})
        if self.objective_trace and len(self.objective_trace) != len(self.items):
            raise SelectionError(
                "objective trace must have one entry per item",
                details={"user_id": self.user_id},
            )

    def __len__(self) -> int:
        return len(self.items)

    @property
    def item_ids(self) -> list[str]:
        return [item.item_id for item in self.items]
