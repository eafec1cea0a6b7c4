"""Dataset ingestion: loaders, filtering and splitting."""

from app.ingest.loaders import (
    load_generic_csv,
    load_movielens,
    load_tasteprofile,
    read_generic_table,
    write_generic_csv,
)
from app.ingest.preprocess import describe, describe_raw, preprocess, read_split, split, write_split

__all__ = [
    "load_generic_csv",
    "load_movielens",
    "load_tasteprofile",
    "read_generic_table",
    "write_generic_csv",
    "describe",
    "describe_raw",
    "preprocess",
    "read_split",
    "split",
    "write_split",
]
