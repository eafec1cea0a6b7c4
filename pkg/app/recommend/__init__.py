"""
Candidate generation: built-in collaborative-filtering recommenders and
externally computed predictions.

Usage:
    from app.recommend import train, candidates
    model = train(split.train, RecommenderConfig(name="UserKNN", algorithm="user_knn"))
    top = candidates(model, "42", split.train, split.train.items_of("42"), n=100)
"""

from app.core.exceptions import RecommenderError
from app.recommend.base import RatingMatrix, Recommender, resolve_rating_bounds
from app.recommend.candidates import (
    candidates,
    generate_candidates,
    load_external_predictions,
    mae,
    read_candidates,
    write_candidates,
)
from app.recommend.funk_svd import FunkSVD
from app.recommend.knn import ItemKNN, UserKNN, similarity_matrix
from app.recommend.slope_one import SlopeOne
from app.schemas.dataset import Domain, InteractionTable
from app.schemas.recommendation import RecommenderConfig

RECOMMENDERS: dict[str, type[Recommender]] = {
    "user_knn": UserKNN,
    "item_knn": ItemKNN,
    "slope_one": SlopeOne,
    "funk_svd": FunkSVD,
}


def train(train_table: InteractionTable, cfg: RecommenderConfig, domain: Domain = "generic") -> Recommender:
    """
    Build and fit the recommender named by ``cfg.algorithm``.

    Raises:
        RecommenderError: For ``external`` recommenders (nothing to train)
    """
    if cfg.algorithm == "external":
        raise RecommenderError(
            "external recommenders have nothing to train",
            details={"recommender": cfg.name, "predictions_path": cfg.predictions_path},
        )
    return RECOMMENDERS[cfg.algorithm](cfg).fit(train_table, domain)


def predict(model: Recommender, user_id: str, item_id: str) -> float:
    """Clamped prediction; unknown users raise RecommenderError."""
    return model.predict(user_id, item_id)


__all__ = [
    "RECOMMENDERS",
    "RatingMatrix",
    "Recommender",
    "resolve_rating_bounds",
    "FunkSVD",
    "ItemKNN",
    "SlopeOne",
    "UserKNN",
    "similarity_matrix",
    "candidates",
    "generate_candidates",
    "load_external_predictions",
    "mae",
    "predict",
    "read_candidates",
    "train",
    "write_candidates",
]
