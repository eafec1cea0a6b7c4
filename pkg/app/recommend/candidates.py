"""
Candidate generation, external predictions and the candidates CSV.
"""

from pathlib import Path
from typing import Mapping, Optional

import numpy as np
import pandas as pd

from app.core.exceptions import IngestError, RecommenderError
from app.core.logging import get_logger
from app.recommend.base import Recommender
from app.schemas.dataset import InteractionTable
from app.schemas.recommendation import CandidateItem, CandidateList

logger = get_logger(__name__)

EXTERNAL_HEADER = ["user_id", "item_id", "predicted_weight"]
CANDIDATES_HEADER = ["user_id", "item_id", "predicted_weight", "rank"]


def candidates(
    model: Recommender,
    user_id: str,
    catalog: InteractionTable,
    train_items_of_user: set[str],
    n: int,
) -> CandidateList:
    """
    Score every catalogue item the user has not trained on and keep the top n.

    Ordering is descending prediction, ties broken by ascending item id.
    """
    if n < 1:
        raise RecommenderError("candidate size must be at least 1", details={"n": n})

    scores = model.score_user(user_id)
    if catalog.item_ids == model.item_ids:
        columns = np.arange(len(catalog.item_ids))
    else:
        columns = np.array([model.item_position(item_id) for item_id in catalog.item_ids], dtype=int)
    unknown = np.array([item_id not in train_items_of_user for item_id in catalog.item_ids], dtype=bool)
    columns = columns[unknown]

    # model item ids are sorted, so column order is item id order
    values = scores[columns]
    order = np.lexsort((columns, -values))[:n]
    item_ids = model.item_ids
    return CandidateList(
        user_id=user_id,
        items=tuple(CandidateItem(item_ids[columns[k]], float(values[k])) for k in order),
    )


def generate_candidates(
    model: Recommender,
    train: InteractionTable,
    n: int,
    users: Optional[list[str]] = None,
) -> dict[str, CandidateList]:
    """Candidate lists for every training user (or the given subset)."""
    result = {}
    for user_id in users or list(train.users):
        result[user_id] = candidates(model, user_id, train, train.items_of(user_id), n)
    logger.info(f"Generated {n} candidates for {len(result)} users with {model.config.name}")
    return result


def mae(model: Recommender, table: InteractionTable) -> float:
    """Mean absolute error of clamped predictions over a table's interactions."""
    errors = []
    for user_id, profile in table.profiles.items():
        scores = model.score_user(user_id)
        for item_id, weight in profile:
            errors.append(abs(scores[model.item_position(item_id)] - weight))
    if not errors:
        raise RecommenderError("cannot compute MAE of an empty table")
    return float(np.mean(errors))


def load_external_predictions(
    path: Path,
    candidate_size: int,
    catalog: Optional[Mapping[str, object]] = None,
    train: Optional[InteractionTable] = None,
) -> dict[str, CandidateList]:
    """
    Read externally computed predictions.

    Args:
        path: ``user_id,item_id,predicted_weight`` CSV
        candidate_size: Rows kept per user after canonical ordering
        catalog: Genre catalogue; rows for items outside it are rejected
        train: When given, each user's training items are removed first

    Raises:
        FileNotFoundError: If the file does not exist
        IngestError: On malformed rows, unknown items or duplicate pairs
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"External predictions not found: {path}")

    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, index_col=False)
    except pd.errors.ParserError as e:
        raise IngestError("malformed row", details={"file": str(path)}, cause=e)
    if list(frame.columns) != EXTERNAL_HEADER:
        raise IngestError(
            "unexpected header",
            details={"file": str(path), "expected": EXTERNAL_HEADER, "found": list(frame.columns)},
        )

    frame = frame.fillna("")
    weights = pd.to_numeric(frame["predicted_weight"].str.strip(), errors="coerce").to_numpy(dtype=float)
    for position in range(len(frame)):
        line = position + 2
        user_id, item_id = frame.at[position, "user_id"].strip(), frame.at[position, "item_id"].strip()
        if not user_id or not item_id or not np.isfinite(weights[position]):
            raise IngestError("malformed row", details={"file": str(path), "line": line})
        if catalog is not None and item_id not in catalog:
            raise IngestError(
                "prediction for item outside the genre catalogue",
                details={"file": str(path), "line": line, "item_id": item_id},
            )

    frame = frame.assign(
        user_id=frame["user_id"].str.strip(),
        item_id=frame["item_id"].str.strip(),
        predicted_weight=weights,
    )
    duplicated = frame.duplicated(subset=["user_id", "item_id"])
    if duplicated.any():
        position = int(np.flatnonzero(duplicated.to_numpy())[0])
        raise IngestError(
            "duplicate (user, item) prediction",
            details={"file": str(path), "line": position + 2},
        )

    result: dict[str, CandidateList] = {}
    for user_id, group in frame.groupby("user_id", sort=True):
        excluded = train.items_of(user_id) if train is not None else set()
        scored = [
            CandidateItem(item_id, float(weight))
            for item_id, weight in zip(group["item_id"], group["predicted_weight"])
            if item_id not in excluded
        ]
        result[user_id] = CandidateList.from_scores(user_id, scored, limit=candidate_size)
    logger.info(f"Loaded external predictions for {len(result)} users from {path.name}")
    return result


def write_candidates(lists: Mapping[str, CandidateList], path: Path) -> Path:
    """Persist candidate lists as ``user_id,item_id,predicted_weight,rank`` sorted by (user_id, rank)."""
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [
        (user_id, item.item_id, item.predicted_weight, rank)
        for user_id in sorted(lists)
        for rank, item in enumerate(lists[user_id].items, start=1)
    ]
    pd.DataFrame(rows, columns=CANDIDATES_HEADER).to_csv(path, index=False)
    return path


def read_candidates(path: Path) -> dict[str, CandidateList]:
    """Inverse of ``write_candidates``."""
    if not path.exists():
        raise FileNotFoundError(f"Candidates file not found: {path}")
    frame = pd.read_csv(path, dtype={"user_id": str, "item_id": str}, keep_default_na=False)
    if list(frame.columns) != CANDIDATES_HEADER:
        raise IngestError("unexpected candidates header", details={"file": str(path)})

    result: dict[str, CandidateList] = {}
    for user_id, group in frame.sort_values(["user_id", "rank"], kind="mergesort").groupby("user_id", sort=True):
        result[user_id] = CandidateList(
            user_id=user_id,
            items=tuple(
                CandidateItem(item_id, float(weight))
                for item_id, weight in zip(group["item_id"], group["predicted_weight"])
            ),
        )
    return result
