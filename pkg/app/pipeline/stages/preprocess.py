"""
Preprocess stage: load the raw dataset, filter it and draw one split per repetition.
"""

from pathlib import Path

import pandas as pd

from app.config import DATA_DIR
from app.core.exceptions import ConfigurationError, PipelineError
from app.ingest.loaders import RawDataset, load_generic_csv, load_movielens, load_tasteprofile, write_generic_csv
from app.ingest.preprocess import describe, describe_raw, preprocess, split, write_split
from app.pipeline.config import DatasetConfig
from app.pipeline.context import RunContext
from app.pipeline.stages.base import PipelineStage
from app.schemas.dataset import DatasetStats

LOADERS = {
    "movie": load_movielens,
    "song": load_tasteprofile,
    "generic": load_generic_csv,
}

STATS_HEADER = ["label", "users", "items", "interactions", "genres"]


def dataset_path(value: str) -> Path:
    """Relative paths missing from the working directory are looked up under DATA_DIR."""
    path = Path(value)
    if not path.is_absolute() and not path.exists() and (DATA_DIR / path).exists():
        return DATA_DIR / path
    return path


def load_raw(dataset: DatasetConfig) -> RawDataset:
    """
    Run the loader of the configured domain.

    Raises:
        ConfigurationError: If a dataset path is not configured
        PipelineError: If a configured file does not exist
    """
    if not dataset.interactions or not dataset.genres:
        raise ConfigurationError(
            "dataset.interactions and dataset.genres must be set",
            details={"interactions": dataset.interactions, "genres": dataset.genres},
        )
    try:
        return LOADERS[dataset.domain](dataset_path(dataset.interactions), dataset_path(dataset.genres))
    except FileNotFoundError as e:
        raise PipelineError(f"missing input file: {e}", details={"domain": dataset.domain}, cause=e)


def write_stats(stats: list[DatasetStats], path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(
        [(s.label, s.users, s.items, s.interactions, s.genres) for s in stats],
        columns=STATS_HEADER,
    ).to_csv(path, index=False)
    return path


class PreprocessStage(PipelineStage):
    """Filters the raw dataset and persists the table plus every repetition's split."""

    @property
    def name(self) -> str:
        return "preprocess"

    def process(self, context: RunContext) -> RunContext:
        config = context.config
        raw = load_raw(config.dataset)
        table = preprocess(raw, config.preprocess, config.dataset.domain)

        stats = [describe_raw(raw), describe(table)]
        for s in stats:
            self.logger.info(
                f"{config.dataset.name} ({s.label}): |U|={s.users} |I|={s.items} |W|={s.interactions} |G|={s.genres}"
            )
        context.stats = stats

        interactions_path, genres_path = write_generic_csv(table, context.dataset_dir)
        stats_path = write_stats(stats, context.dataset_dir / "stats.csv")
        for name, path in (("interactions", interactions_path), ("genres", genres_path), ("stats", stats_path)):
            context.manifest.record_output(f"dataset.{name}", path, context.output_dir)

        for repetition in range(config.repetitions):
            split_cfg = config.preprocess.model_copy(update={"seed": context.split_seed(repetition)})
            dataset = split(table, split_cfg)
            path = write_split(dataset, context.split_path(repetition))
            context.manifest.record_output(f"rep{repetition}.split", path, context.output_dir)
            self.logger.info(
                f"Repetition {repetition}: {dataset.train.n_interactions} train / "
                f"{dataset.test.n_interactions} test interactions"
            )
        return context
