"""
Cleaning, filtering and per-user train/test splitting.
"""

import math
from pathlib import Path

import pandas as pd

from app.core.exceptions import IngestError
from app.core.logging import get_logger
from app.core.seeding import rng_for
from app.ingest.loaders import RawDataset
from app.schemas.dataset import (
    INTERACTION_COLUMNS,
    DatasetStats,
    Domain,
    InteractionTable,
    PreprocessConfig,
    SplitDataset,
    canonical_frame,
)

logger = get_logger(__name__)

SPLIT_COLUMNS = ["user_id", "item_id", "fold"]

# floor(train_fraction * n) must not lose a whole item to binary rounding, e.g. 0.7 * 30
_FLOOR_EPSILON = 1e-9


def _raw_frame(raw: RawDataset) -> pd.DataFrame:
    interactions, _ = raw
    return pd.DataFrame(
        [(r.user_id, r.item_id, r.weight) for r in interactions],
        columns=INTERACTION_COLUMNS,
    )


def _collapse_duplicates(frame: pd.DataFrame, domain: Domain) -> pd.DataFrame:
    """Play counts of repeated (user, song) rows add up; other domains keep the last row."""
    if domain == "song":
        return frame.groupby(["user_id", "item_id"], as_index=False, sort=False)["weight"].sum()
    return frame.drop_duplicates(subset=["user_id", "item_id"], keep="last")


def _filter_to_fixed_point(frame: pd.DataFrame, cfg: PreprocessConfig) -> pd.DataFrame:
    """Alternate item and user thresholds until neither removes anything."""
    passes = 0
    while True:
        passes += 1
        before = len(frame)
        item_counts = frame.groupby("item_id")["user_id"].transform("size")
        frame = frame[item_counts >= cfg.min_item_interactions]
        user_counts = frame.groupby("user_id")["item_id"].transform("size")
        frame = frame[user_counts >= cfg.min_profile_size]
        logger.debug(f"Filter pass {passes}: {before} -> {len(frame)} interactions")
        if len(frame) == before:
            break
    logger.info(f"Profile/item filters converged after {passes} passes")
    return frame


def preprocess(raw: RawDataset, cfg: PreprocessConfig, domain: Domain) -> InteractionTable:
    """
    Apply the cleaning rules in fixed order.

    1. drop interactions on items without genres
    2. movie: drop ratings below ``rating_cut``; song: drop play counts below ``min_play_count``
    3. drop sparse items, then small profiles, until a fixed point
    4. genre universe = sorted genres of the surviving items

    Raises:
        IngestError: "dataset exhausted by filters" when nothing survives
    """
    _, item_genres = raw
    catalogue = {item.item_id: item for item in item_genres}

    frame = _collapse_duplicates(_raw_frame(raw), domain)
    logger.info(f"Raw dataset: {len(frame)} interactions, {len(catalogue)} items with genres")

    frame = frame[frame["item_id"].isin(catalogue)]
    logger.info(f"After genre filter: {len(frame)} interactions")

    if domain == "movie":
        frame = frame[frame["weight"] >= cfg.rating_cut]
        logger.info(f"After rating cut {cfg.rating_cut}: {len(frame)} interactions")
    elif domain == "song":
        frame = frame[frame["weight"] >= cfg.min_play_count]
        logger.info(f"After play-count cut {cfg.min_play_count}: {len(frame)} interactions")

    frame = _filter_to_fixed_point(frame, cfg)
    if frame.empty:
        raise IngestError(
            "dataset exhausted by filters",
            details={
                "min_profile_size": cfg.min_profile_size,
                "min_item_interactions": cfg.min_item_interactions,
            },
        )

    surviving = {item_id: catalogue[item_id] for item_id in frame["item_id"].unique()}
    universe = tuple(sorted({g for item in surviving.values() for g in item.genres}))
    table = InteractionTable(
        interactions=canonical_frame(frame.astype({"weight": float})),
        items=surviving,
        genre_universe=universe,
    )
    logger.info(
        f"Preprocessed: {len(table.users)} users, {len(surviving)} items, "
        f"{table.n_interactions} interactions, {len(universe)} genres"
    )
    return table


def train_size(n: int, train_fraction: float) -> int:
    """floor(train_fraction * n)."""
    return int(math.floor(train_fraction * n + _FLOOR_EPSILON))


def split(table: InteractionTable, cfg: PreprocessConfig) -> SplitDataset:
    """
    Per-user random train/test split.

    Each profile is ordered by item id, then shuffled by a generator keyed on
    (cfg.seed, user_id); the first floor(train_fraction * n) items train.
    """
    train_rows: list[tuple[str, str, float]] = []
    test_rows: list[tuple[str, str, float]] = []

    for user_id, profile in table.profiles.items():
        n = len(profile)
        if n < cfg.min_profile_size:
            raise IngestError(
                "profile smaller than min_profile_size",
                details={"user_id": user_id, "size": n, "min_profile_size": cfg.min_profile_size},
            )
        n_train = train_size(n, cfg.train_fraction)
        if n_train == 0:
            raise IngestError(
                "train fraction leaves user without training data",
                details={"user_id": user_id, "size": n},
            )
        order = rng_for(cfg.seed, user_id).permutation(n)
        for position, index in enumerate(order):
            item_id, weight = profile[index]
            (train_rows if position < n_train else test_rows).append((user_id, item_id, weight))

    train = InteractionTable(
        interactions=canonical_frame(pd.DataFrame(train_rows, columns=INTERACTION_COLUMNS)),
        items=table.items,
        genre_universe=table.genre_universe,
    )
    test = InteractionTable(
        interactions=canonical_frame(pd.DataFrame(test_rows, columns=INTERACTION_COLUMNS)),
        items=table.items,
        genre_universe=table.genre_universe,
    )
    logger.info(f"Split (seed={cfg.seed}): {train.n_interactions} train / {test.n_interactions} test")
    return SplitDataset(train=train, test=test, seed=cfg.seed)


def describe(table: InteractionTable, label: str = "used") -> DatasetStats:
    """|U|, |I|, |W|, |G| of a preprocessed table."""
    return DatasetStats.of(table, label=label)


def describe_raw(raw: RawDataset, label: str = "raw") -> DatasetStats:
    """|U|, |I|, |W|, |G| of loader output before any filtering."""
    interactions, item_genres = raw
    frame = _raw_frame(raw)
    items = set(frame["item_id"].unique()) | {item.item_id for item in item_genres}
    genres = {g for item in item_genres for g in item.genres}
    return DatasetStats(
        users=int(frame["user_id"].nunique()),
        items=len(items),
        interactions=len(interactions),
        genres=len(genres),
        label=label,
    )


def write_split(dataset: SplitDataset, path: Path) -> Path:
    """Persist the split manifest ``user_id,item_id,fold`` sorted by (user_id, item_id)."""
    path.parent.mkdir(parents=True, exist_ok=True)
    train = dataset.train.interactions[["user_id", "item_id"]].assign(fold="train")
    test = dataset.test.interactions[["user_id", "item_id"]].assign(fold="test")
    manifest = canonical_frame(pd.concat([train, test], ignore_index=True))
    manifest.to_csv(path, index=False, columns=SPLIT_COLUMNS)
    return path


def read_split(table: InteractionTable, path: Path, seed: int) -> SplitDataset:
    """
    Rebuild a SplitDataset from a table and its split manifest.

    Raises:
        FileNotFoundError: If the manifest does not exist
        IngestError: If the manifest and the table disagree
    """
    if not path.exists():
        raise FileNotFoundError(f"Split manifest not found: {path}")
    manifest = pd.read_csv(path, dtype=str, keep_default_na=False)
    if list(manifest.columns) != SPLIT_COLUMNS:
        raise IngestError("unexpected split manifest header", details={"file": str(path)})
    if not manifest["fold"].isin(["train", "test"]).all():
        raise IngestError("split fold must be train or test", details={"file": str(path)})

    merged = table.interactions.merge(manifest, on=["user_id", "item_id"], how="outer", indicator=True)
    if not (merged["_merge"] == "both").all():
        raise IngestError("split manifest does not match the dataset", details={"file": str(path)})

    def _fold(name: str) -> InteractionTable:
        rows = merged.loc[merged["fold"] == name, INTERACTION_COLUMNS]
        return InteractionTable(
            interactions=canonical_frame(rows.astype({"weight": float})),
            items=table.items,
            genre_universe=table.genre_universe,
        )

    return SplitDataset(train=_fold("train"), test=_fold("test"), seed=seed)
