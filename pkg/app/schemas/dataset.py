"""
Dataset schemas: raw feedback, genre annotations and the preprocessed table.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Literal, Mapping, Optional

import pandas as pd
from pydantic import BaseModel, Field

from app.core.exceptions import IngestError

Domain = Literal["movie", "song", "generic"]

INTERACTION_COLUMNS = ["user_id", "item_id", "weight"]


@dataclass(frozen=True)
class RawInteraction:
    """One (user, item, weight) feedback triple: a rating or a play count."""
    user_id: str
    item_id: str
    weight: float

    def __post_init__(self):
        if not math.isfinite(self.weight) or self.weight < 0:
            raise IngestError(
                "weight must be finite and non-negative",
                details={"user_id": self.user_id, "item_id": self.item_id, "weight": self.weight},
            )


@dataclass(frozen=True)
class ItemGenres:
    """Genre labels attached to one item."""
    item_id: str
    genres: frozenset[str]

    def __post_init__(self):
        if not self.genres:
            raise IngestError("item has no genres", details={"item_id": self.item_id})

    @classmethod
    def parse(cls, item_id: str, field_value: str, sep: str = "|") -> "ItemGenres":
        """Build from a separator-joined genre field, e.g. ``Pop|Rock``."""
        genres = frozenset(g.strip() for g in field_value.split(sep) if g.strip())
        return cls(item_id=item_id, genres=genres)

    def joined(self, sep: str = "|") -> str:
        return sep.join(sorted(self.genres))


class PreprocessConfig(BaseModel):
    """Cleaning, filtering and splitting parameters."""

    rating_cut: float = Field(default=4.0, ge=0, description="Minimum rating kept (movie domain)")
    min_profile_size: int = Field(default=30, ge=0, description="Minimum interactions per user")
    min_item_interactions: int = Field(default=3, ge=0, description="Minimum interactions per item")
    min_play_count: int = Field(default=3, ge=0, description="Minimum play count kept (song domain)")
    train_fraction: float = Field(default=0.7, gt=0, lt=1, description="Share of each profile used for training")
    seed: int = Field(default=42, description="Root seed of the per-user shuffle")

    model_config = {"frozen": True}


@dataclass(frozen=True, eq=False)
class InteractionTable:
    """
    Preprocessed dataset: feedback triples plus the item catalogue.

    ``interactions`` is a DataFrame with columns user_id, item_id, weight,
    sorted by (user_id, item_id). ``items`` is the genre catalogue; it may
    hold items without interactions (e.g. the train half of a split keeps
    the full catalogue).
    """
    interactions: pd.DataFrame
    items: Mapping[str, ItemGenres]
    genre_universe: tuple[str, ...]

    def __post_init__(self):
        frame = self.interactions
        if list(frame.columns) != INTERACTION_COLUMNS:
            raise IngestError(
                "interaction frame has unexpected columns",
                details={"columns": list(frame.columns)},
            )
        if frame.duplicated(subset=["user_id", "item_id"]).any():
            raise IngestError("duplicate (user, item) pairs in interaction table")
        unknown = set(frame["item_id"].unique()) - set(self.items)
        if unknown:
            raise IngestError(
                "interactions reference items outside the catalogue",
                details={"items": sorted(unknown)[:5]},
            )
        universe = set(self.genre_universe)
        for item in self.items.values():
            if not item.genres <= universe:
                raise IngestError(
                    "item genre missing from genre universe",
                    details={"item_id": item.item_id, "genres": sorted(item.genres - universe)},
                )

    @classmethod
    def build(
        cls,
        interactions: Iterable[RawInteraction],
        items: Iterable[ItemGenres],
        genre_universe: Optional[Iterable[str]] = None,
    ) -> "InteractionTable":
        """Build a table from records; the genre universe defaults to the catalogue's genres."""
        catalogue = {item.item_id: item for item in items}
        frame = pd.DataFrame(
            [(r.user_id, r.item_id, float(r.weight)) for r in interactions],
            columns=INTERACTION_COLUMNS,
        )
        if genre_universe is None:
            genre_universe = {g for item in catalogue.values() for g in item.genres}
        return cls(
            interactions=canonical_frame(frame),
            items=catalogue,
            genre_universe=tuple(sorted(genre_universe)),
        )

    @cached_property
    def users(self) -> tuple[str, ...]:
        return tuple(sorted(self.interactions["user_id"].unique()))

    @cached_property
    def item_ids(self) -> tuple[str, ...]:
        """Sorted catalogue ids."""
        return tuple(sorted(self.items))

    @property
    def n_interactions(self) -> int:
        return len(self.interactions)

    @cached_property
    def profiles(self) -> dict[str, list[tuple[str, float]]]:
        """user_id -> [(item_id, weight), ...] sorted by item_id."""
        result: dict[str, list[tuple[str, float]]] = {}
        for user_id, item_id, weight in self.interactions.itertuples(index=False, name=None):
            result.setdefault(user_id, []).append((item_id, float(weight)))
        return result

    def items_of(self, user_id: str) -> set[str]:
        return {item_id for item_id, _ in self.profiles.get(user_id, [])}

    def genres_touched(self, user_id: str) -> set[str]:
        """Genres covered by the user's profile items."""
        touched: set[str] = set()
        for item_id, _ in self.profiles.get(user_id, []):
            touched |= self.items[item_id].genres
        return touched

    def records(self) -> list[RawInteraction]:
        return [
            RawInteraction(user_id, item_id, float(weight))
            for user_id, item_id, weight in self.interactions.itertuples(index=False, name=None)
        ]


@dataclass(frozen=True, eq=False)
class SplitDataset:
    """Per-user train/test partition of an InteractionTable."""
    train: InteractionTable
    test: InteractionTable
    seed: int


@dataclass(frozen=True)
class DatasetStats:
    """Size summary of a dataset: |U|, |I|, |W|, |G|."""
    users: int
    items: int
    interactions: int
    genres: int
    label: str = field(default="dataset")

    @classmethod
    def of(cls, table: InteractionTable, label: str = "dataset") -> "DatasetStats":
        frame = table.interactions
        used_items = set(frame["item_id"].unique())
        genres = {g for item_id in used_items for g in table.items[item_id].genres}
        return cls(
            users=frame["user_id"].nunique(),
            items=len(used_items),
            interactions=len(frame),
            genres=len(genres),
            label=label,
        )


def canonical_frame(frame: pd.DataFrame) -> pd.DataFrame:
    """Sort interactions by (user_id, item_id) with a fresh index."""
    return frame.sort_values(["user_id", "item_id"], kind="mergesort").reset_index(drop=True)
