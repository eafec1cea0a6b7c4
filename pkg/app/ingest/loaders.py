"""
Dataset loaders.

Each loader returns (interactions, item_genres) in the raw form consumed by
``preprocess``. Files are parsed with pandas as strings so ids stay opaque;
weights are converted afterwards so a bad value can be reported with its
line number.
"""

import re
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from app.core.exceptions import IngestError
from app.core.logging import get_logger
from app.schemas.dataset import InteractionTable, ItemGenres, RawInteraction

logger = get_logger(__name__)

RawDataset = tuple[list[RawInteraction], list[ItemGenres]]

MOVIELENS_RATINGS_HEADER = ["userId", "movieId", "rating", "timestamp"]
MOVIELENS_MOVIES_HEADER = ["movieId", "title", "genres"]
GENERIC_INTERACTIONS_HEADER = ["user_id", "item_id", "weight"]
GENERIC_GENRES_HEADER = ["item_id", "genres"]

NO_GENRES = "(no genres listed)"

_PARSER_LINE = re.compile(r"line (\d+)")


def _read_frame(
    path: Path,
    sep: str,
    header: Optional[Sequence[str]] = None,
    names: Optional[Sequence[str]] = None,
    comment: Optional[str] = None,
) -> pd.DataFrame:
    """
    Read a delimited file as strings.

    Args:
        path: File to read
        sep: Field separator
        header: Expected header row; the file must start with exactly it
        names: Column names for header-less files
        comment: Lines starting with it are skipped

    Raises:
        FileNotFoundError: If the file does not exist
        IngestError: On a malformed row or an unexpected header
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Dataset file not found: {path}")

    try:
        frame = pd.read_csv(
            path,
            sep=sep,
            dtype=str,
            keep_default_na=False,
            header=0 if header is not None else None,
            names=None if header is not None else list(names or []),
            skip_blank_lines=names is None,
            index_col=False,
            comment=comment,
            encoding="utf-8",
        )
    except pd.errors.ParserError as e:
        match = _PARSER_LINE.search(str(e))
        raise IngestError(
            "malformed row",
            details={"file": str(path), "line": int(match.group(1)) if match else None},
            cause=e,
        )
    except pd.errors.EmptyDataError as e:
        raise IngestError("empty dataset file", details={"file": str(path)}, cause=e)

    if header is not None and list(frame.columns) != list(header):
        raise IngestError(
            "unexpected header",
            details={"file": str(path), "expected": list(header), "found": list(frame.columns)},
        )
    return frame.fillna("")


def _line_of(index: int, has_header: bool) -> int:
    return index + (2 if has_header else 1)


def _uncommented_lines(path: Path, comment: str) -> list[int]:
    """1-based file line of every row pandas returns when comment lines are skipped."""
    with open(path, encoding="utf-8") as handle:
        return [number for number, line in enumerate(handle, start=1) if not line.startswith(comment)]


def _check_complete(frame: pd.DataFrame, columns: Sequence[str], path: Path, has_header: bool) -> None:
    """Every listed column must be non-empty on every row."""
    missing = np.zeros(len(frame), dtype=bool)
    for column in columns:
        missing |= frame[column].str.strip().eq("").to_numpy()
    if missing.any():
        index = int(frame.index[np.flatnonzero(missing)[0]])
        raise IngestError(
            "malformed row",
            details={"file": str(path), "line": _line_of(index, has_header)},
        )


def _parse_weights(values: pd.Series, path: Path, has_header: bool) -> np.ndarray:
    """Convert a weight column, reporting the first unparseable value."""
    weights = pd.to_numeric(values.str.strip(), errors="coerce").to_numpy(dtype=float)
    bad = ~np.isfinite(weights) | (weights < 0)
    if bad.any():
        position = int(np.flatnonzero(bad)[0])
        raise IngestError(
            "unparseable weight",
            details={
                "file": str(path),
                "line": _line_of(int(values.index[position]), has_header),
                "value": values.iloc[position],
            },
        )
    return weights


def _interactions(users: pd.Series, items: pd.Series, weights: np.ndarray) -> list[RawInteraction]:
    return [
        RawInteraction(user_id, item_id, float(weight))
        for user_id, item_id, weight in zip(users.str.strip(), items.str.strip(), weights)
    ]


def load_movielens(ratings_path: Path, movies_path: Path) -> RawDataset:
    """
    Load MovieLens ``ratings.csv`` and ``movies.csv``.

    Movies whose genre field is empty or ``(no genres listed)`` are omitted.

    Args:
        ratings_path: ``userId,movieId,rating,timestamp`` file
        movies_path: ``movieId,title,genres`` file with pipe-separated genres

    Returns:
        (interactions, item_genres)
    """
    ratings_path, movies_path = Path(ratings_path), Path(movies_path)

    ratings = _read_frame(ratings_path, ",", header=MOVIELENS_RATINGS_HEADER)
    _check_complete(ratings, ["userId", "movieId", "rating"], ratings_path, has_header=True)
    weights = _parse_weights(ratings["rating"], ratings_path, has_header=True)
    interactions = _interactions(ratings["userId"], ratings["movieId"], weights)
    logger.info(f"Loaded {len(interactions)} ratings from {ratings_path.name}")

    movies = _read_frame(movies_path, ",", header=MOVIELENS_MOVIES_HEADER)
    _check_complete(movies, ["movieId"], movies_path, has_header=True)
    item_genres: list[ItemGenres] = []
    skipped = 0
    for movie_id, genres in zip(movies["movieId"].str.strip(), movies["genres"].str.strip()):
        if not genres or genres == NO_GENRES:
            skipped += 1
            continue
        item_genres.append(ItemGenres.parse(movie_id, genres))
    logger.info(f"Loaded {len(item_genres)} movies with genres ({skipped} without genres skipped)")

    return interactions, item_genres


def load_tasteprofile(triplets_path: Path, genre_annotations_path: Path) -> RawDataset:
    """
    Load Taste Profile play-count triplets and a song genre annotation file.

    Args:
        triplets_path: ``user<TAB>song<TAB>play_count`` lines, no header
        genre_annotations_path: ``song_id<TAB>genre[<TAB>genre2]`` lines;
            lines starting with ``#`` are comments

    Returns:
        (interactions, item_genres); songs without an annotation line get no
        ItemGenres and are dropped by ``preprocess``
    """
    triplets_path, annotations_path = Path(triplets_path), Path(genre_annotations_path)

    triplets = _read_frame(triplets_path, "\t", names=["user_id", "item_id", "weight"])
    triplets = triplets[~(triplets["user_id"].eq("") & triplets["item_id"].eq("") & triplets["weight"].eq(""))]
    _check_complete(triplets, ["user_id", "item_id", "weight"], triplets_path, has_header=False)
    weights = _parse_weights(triplets["weight"], triplets_path, has_header=False)
    interactions = _interactions(triplets["user_id"], triplets["item_id"], weights)
    logger.info(f"Loaded {len(interactions)} play-count triplets from {triplets_path.name}")

    annotations = _read_frame(annotations_path, "\t", names=["item_id", "genre_1", "genre_2"], comment="#")
    item_genres: list[ItemGenres] = []
    for index, (song_id, first, second) in enumerate(
        annotations[["item_id", "genre_1", "genre_2"]].itertuples(index=False, name=None)
    ):
        song_id = song_id.strip()
        if not song_id and not first.strip():
            continue
        if not song_id or not first.strip():
            raise IngestError(
                "malformed row",
                details={"file": str(annotations_path), "line": _uncommented_lines(annotations_path, "#")[index]},
            )
        genres = frozenset(g.strip() for g in (first, second) if g.strip())
        item_genres.append(ItemGenres(song_id, genres))
    logger.info(f"Loaded {len(item_genres)} annotated songs from {annotations_path.name}")

    return interactions, item_genres


def load_generic_csv(interactions_path: Path, genres_path: Path) -> RawDataset:
    """
    Load the canonical interchange pair.

    Args:
        interactions_path: ``user_id,item_id,weight`` file
        genres_path: ``item_id,genres`` file, pipe-separated, never empty

    Returns:
        (interactions, item_genres)
    """
    interactions_path, genres_path = Path(interactions_path), Path(genres_path)

    frame = _read_frame(interactions_path, ",", header=GENERIC_INTERACTIONS_HEADER)
    _check_complete(frame, GENERIC_INTERACTIONS_HEADER, interactions_path, has_header=True)
    weights = _parse_weights(frame["weight"], interactions_path, has_header=True)
    interactions = _interactions(frame["user_id"], frame["item_id"], weights)

    genres = _read_frame(genres_path, ",", header=GENERIC_GENRES_HEADER)
    _check_complete(genres, GENERIC_GENRES_HEADER, genres_path, has_header=True)
    item_genres = [
        ItemGenres.parse(item_id, field_value)
        for item_id, field_value in zip(genres["item_id"].str.strip(), genres["genres"])
    ]
    logger.info(f"Loaded {len(interactions)} interactions and {len(item_genres)} items")

    return interactions, item_genres


def write_generic_csv(table: InteractionTable, directory: Path) -> tuple[Path, Path]:
    """
    Persist a table as the canonical interchange pair.

    Returns:
        (interactions.csv path, genres.csv path)
    """
    directory.mkdir(parents=True, exist_ok=True)
    interactions_path = directory / "interactions.csv"
    genres_path = directory / "genres.csv"

    table.interactions.to_csv(interactions_path, index=False)
    pd.DataFrame(
        [(item_id, table.items[item_id].joined()) for item_id in table.item_ids],
        columns=GENERIC_GENRES_HEADER,
    ).to_csv(genres_path, index=False)

    return interactions_path, genres_path


def read_generic_table(directory: Path) -> InteractionTable:
    """Load a table written by ``write_generic_csv`` without re-filtering it."""
    interactions, item_genres = load_generic_csv(directory / "interactions.csv", directory / "genres.csv")
    return InteractionTable.build(interactions, item_genres)
