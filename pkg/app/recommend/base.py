"""
Abstract base class for rating predictors.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np

from app.core.exceptions import RecommenderError
from app.core.logging import get_logger
from app.schemas.dataset import Domain, InteractionTable
from app.schemas.recommendation import RecommenderConfig


@dataclass(frozen=True, eq=False)
class RatingMatrix:
    """
    Dense user x item view of a training table.

    Items cover the whole catalogue (sorted ids), so items nobody rated in
    training still have a column. ``ratings`` is 0 where ``mask`` is False.
    """
    user_ids: tuple[str, ...]
    item_ids: tuple[str, ...]
    ratings: np.ndarray
    mask: np.ndarray

    @classmethod
    def from_table(cls, table: InteractionTable) -> "RatingMatrix":
        user_ids = table.users
        item_ids = table.item_ids
        user_index = {u: k for k, u in enumerate(user_ids)}
        item_index = {i: k for k, i in enumerate(item_ids)}

        frame = table.interactions
        rows = frame["user_id"].map(user_index).to_numpy()
        cols = frame["item_id"].map(item_index).to_numpy()
        ratings = np.zeros((len(user_ids), len(item_ids)))
        mask = np.zeros((len(user_ids), len(item_ids)), dtype=bool)
        ratings[rows, cols] = frame["weight"].to_numpy(dtype=float)
        mask[rows, cols] = True
        return cls(user_ids, item_ids, ratings, mask)

    @property
    def global_mean(self) -> float:
        return float(self.ratings[self.mask].mean())

    def user_means(self) -> np.ndarray:
        counts = self.mask.sum(axis=1)
        return self.ratings.sum(axis=1) / np.maximum(counts, 1)

    def triplets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(user index, item index, rating) of every observed cell, row-major."""
        rows, cols = np.nonzero(self.mask)
        return rows, cols, self.ratings[rows, cols]


def resolve_rating_bounds(
    config: RecommenderConfig,
    train: InteractionTable,
    domain: Domain,
) -> tuple[float, float]:
    """
    Prediction clamp.

    Explicit bounds win; otherwise movies use the 1-5 star scale, songs use
    [1, max observed play count] and generic data its observed range.
    """
    if config.rating_bounds is not None:
        return config.rating_bounds
    weights = train.interactions["weight"]
    if domain == "movie":
        return (1.0, 5.0)
    if domain == "song":
        return (1.0, max(float(weights.max()), 2.0))
    low, high = float(weights.min()), float(weights.max())
    return (low, high) if low < high else (low, low + 1.0)


class Recommender(ABC):
    """
    Base class for all built-in recommenders.

    Subclasses implement ``_fit`` (build the model from ``self.matrix``) and
    ``_score_user`` (unclamped predictions for one user over every catalogue
    item). Clamping, id lookup and logging live here.

    Usage:
        class MyRecommender(Recommender):
            @property
            def name(self) -> str:
                return "my_recommender"

            def _fit(self) -> None:
                ...

            def _score_user(self, u: int) -> np.ndarray:
                ...
    """

    def __init__(self, config: RecommenderConfig):
        self.config = config
        self.matrix: Optional[RatingMatrix] = None
        self.bounds: tuple[float, float] = (-np.inf, np.inf)
        self._user_index: dict[str, int] = {}
        self._item_index: dict[str, int] = {}
        self._logger = None

    @property
    @abstractmethod
    def name(self) -> str:
        """Algorithm name for logging and identification."""
        pass

    @abstractmethod
    def _fit(self) -> None:
        pass

    @abstractmethod
    def _score_user(self, u: int) -> np.ndarray:
        pass

    @property
    def logger(self):
        """Get logger for this recommender."""
        if self._logger is None:
            self._logger = get_logger(f"recommend.{self.name}")
        return self._logger

    def fit(self, train: InteractionTable, domain: Domain = "generic") -> "Recommender":
        """
        Train on a table.

        Args:
            train: Training interactions; its catalogue defines the item universe
            domain: Dataset domain, used to derive the prediction clamp

        Returns:
            Self, trained
        """
        if train.n_interactions == 0:
            raise RecommenderError("cannot train on an empty table", details={"recommender": self.config.name})

        self.matrix = RatingMatrix.from_table(train)
        self.bounds = resolve_rating_bounds(self.config, train, domain)
        self._user_index = {u: k for k, u in enumerate(self.matrix.user_ids)}
        self._item_index = {i: k for k, i in enumerate(self.matrix.item_ids)}

        self.logger.info(
            f"Training {self.config.name} on {len(self.matrix.user_ids)} users x "
            f"{len(self.matrix.item_ids)} items (clamp {self.bounds})"
        )
        self._fit()
        return self

    def _require_fitted(self) -> RatingMatrix:
        if self.matrix is None:
            raise RecommenderError("recommender is not trained", details={"recommender": self.config.name})
        return self.matrix

    def user_position(self, user_id: str) -> int:
        self._require_fitted()
        try:
            return self._user_index[user_id]
        except KeyError:
            raise RecommenderError("unknown user", details={"user_id": user_id, "recommender": self.config.name})

    def item_position(self, item_id: str) -> int:
        self._require_fitted()
        try:
            return self._item_index[item_id]
        except KeyError:
            raise RecommenderError("unknown item", details={"item_id": item_id, "recommender": self.config.name})

    @property
    def item_ids(self) -> tuple[str, ...]:
        return self._require_fitted().item_ids

    def score_user(self, user_id: str) -> np.ndarray:
        """Clamped predictions of one user for every catalogue item, in ``item_ids`` order."""
        scores = self._score_user(self.user_position(user_id))
        return np.clip(scores, *self.bounds)

    def predict(self, user_id: str, item_id: str) -> float:
        """Clamped prediction for one (user, item) pair."""
        column = self.item_position(item_id)
        return float(self.score_user(user_id)[column])

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__}(name={self.config.name})>"
