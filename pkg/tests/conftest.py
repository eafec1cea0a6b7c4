"""Shared fixtures: the eight-item toy catalogue and a synthetic MovieLens dump."""

from pathlib import Path

import numpy as np
import pandas as pd
from pytest import fixture

from app.schemas.dataset import InteractionTable, ItemGenres, RawInteraction

TOY_GENRES = {
    "I-001": "Pop|Rock",
    "I-002": "Pop",
    "I-003": "Blues",
    "I-004": "Samba",
    "I-005": "Funk",
    "I-006": "K-Pop",
    "I-007": "MPB|Funk",
    "I-008": "Pop|Rock|Pagode|Funk",
}

TOY_PREFS = [
    ("U-001", "I-001", 1.0),
    ("U-001", "I-002", 4.0),
    ("U-001", "I-008", 5.0),
    ("U-002", "I-004", 2.0),
    ("U-002", "I-007", 10.0),
    ("U-003", "I-001", 9.0),
    ("U-003", "I-003", 11.0),
    ("U-003", "I-004", 3.0),
]

SYNTH_GENRES = ["Action", "Comedy", "Drama", "Horror", "Romance", "Sci-Fi"]


@fixture
def toy_catalog() -> dict[str, ItemGenres]:
    return {item_id: ItemGenres.parse(item_id, genres) for item_id, genres in TOY_GENRES.items()}


@fixture
def toy_table(toy_catalog) -> InteractionTable:
    return InteractionTable.build(
        [RawInteraction(u, i, w) for u, i, w in TOY_PREFS],
        toy_catalog.values(),
    )


def write_synthetic_movielens(
    directory: Path,
    users: int = 12,
    items: int = 24,
    rated: int = 16,
    seed: int = 3,
) -> tuple[Path, Path]:
    """
    A small MovieLens-format dump.

    Every user gives ``rated`` ratings of 4 or 5 plus two low ratings that
    the rating cut removes.
    """
    rng = np.random.default_rng(seed)
    directory.mkdir(parents=True, exist_ok=True)

    movies = []
    for k in range(items):
        size = 1 + k % 3
        genres = [SYNTH_GENRES[(k + offset) % len(SYNTH_GENRES)] for offset in range(size)]
        movies.append((str(100 + k), f"Movie {k} (1999)", "|".join(genres)))
    movies.append((str(100 + items), "No Genre Movie (2001)", "(no genres listed)"))

    ratings = []
    for u in range(users):
        chosen = rng.choice(items, size=rated + 2, replace=False)
        for position, k in enumerate(chosen):
            rating = 2.0 if position >= rated else float(rng.choice([4.0, 4.5, 5.0]))
            ratings.append((str(u + 1), str(100 + k), rating, 964982703 + position))
        ratings.append((str(u + 1), str(100 + items), 5.0, 964982800))

    ratings_path = directory / "ratings.csv"
    movies_path = directory / "movies.csv"
    pd.DataFrame(ratings, columns=["userId", "movieId", "rating", "timestamp"]).to_csv(ratings_path, index=False)
    pd.DataFrame(movies, columns=["movieId", "title", "genres"]).to_csv(movies_path, index=False)
    return ratings_path, movies_path


@fixture
def movielens_files(tmp_path) -> tuple[Path, Path]:
    return write_synthetic_movielens(tmp_path / "ml")


@fixture
def movielens_split(movielens_files):
    """Preprocessed synthetic split plus ten UserKNN candidates per user."""
    from app.ingest import load_movielens, preprocess, split
    from app.recommend import generate_candidates, train
    from app.schemas.dataset import PreprocessConfig
    from app.schemas.recommendation import RecommenderConfig

    cfg = PreprocessConfig(min_profile_size=8, min_item_interactions=2, seed=21)
    dataset = split(preprocess(load_movielens(*movielens_files), cfg, "movie"), cfg)
    model = train(dataset.train, RecommenderConfig(name="UserKNN", algorithm="user_knn", k_neighbors=5), "movie")
    return dataset, generate_candidates(model, dataset.train, 10)


@fixture
def larger_movielens(tmp_path) -> tuple[Path, Path]:
    """150 users over 40 movies, 16 kept ratings each."""
    return write_synthetic_movielens(tmp_path / "ml-large", users=150, items=40, seed=8)
