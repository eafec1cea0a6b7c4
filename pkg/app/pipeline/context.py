"""
Shared run state and the on-disk layout of an experiment.

    <out>/dataset/interactions.csv, genres.csv, stats.csv
    <out>/rep_<r>/split.csv
    <out>/rep_<r>/candidates/<recommender>.csv
    <out>/rep_<r>/rankings/<recommender>/<div>-<bal>-<lambda>.csv
    <out>/rep_<r>/evaluations/<recommender>/<div>-<bal>-<lambda>.csv
    <out>/metrics.csv, series.csv, decision.csv, winner.txt, manifest.txt

Stages exchange data only through these files, so any stage can be run on
its own once its inputs exist.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Optional

from app.calibration.tradeoff import fit_bias_params
from app.core.exceptions import PipelineError
from app.core.executor import ExecutorManager
from app.core.seeding import derive_seed
from app.ingest.loaders import read_generic_table
from app.ingest.preprocess import read_split
from app.pipeline.config import ExperimentConfig
from app.pipeline.manifest import RunManifest
from app.recommend.candidates import read_candidates
from app.schemas.calibration import BiasParams
from app.schemas.dataset import DatasetStats, InteractionTable, SplitDataset
from app.schemas.evaluation import DecisionReport
from app.schemas.recommendation import CandidateList


@dataclass
class RunContext:
    """Everything a stage needs: config, output root, manifest and the worker pool."""
    config: ExperimentConfig
    output_dir: Path
    manifest: RunManifest
    executor: ExecutorManager = field(default_factory=ExecutorManager)
    stats: list[DatasetStats] = field(default_factory=list)
    report: Optional[DecisionReport] = None

    @property
    def dataset_dir(self) -> Path:
        return self.output_dir / "dataset"

    def rep_dir(self, repetition: int) -> Path:
        return self.output_dir / f"rep_{repetition}"

    def split_path(self, repetition: int) -> Path:
        return self.rep_dir(repetition) / "split.csv"

    def split_seed(self, repetition: int) -> int:
        return derive_seed(self.config.seed, "split", repetition)

    def model_seed(self, repetition: int) -> int:
        return derive_seed(self.config.seed, "funk_svd", repetition)

    def candidates_path(self, repetition: int, recommender: str) -> Path:
        return self.rep_dir(repetition) / "candidates" / f"{recommender}.csv"

    def rankings_path(self, repetition: int, recommender: str, label: str) -> Path:
        return self.rep_dir(repetition) / "rankings" / recommender / f"{label}.csv"

    def evaluation_path(self, repetition: int, recommender: str, label: str) -> Path:
        return self.rep_dir(repetition) / "evaluations" / recommender / f"{label}.csv"

    @property
    def metrics_path(self) -> Path:
        return self.output_dir / "metrics.csv"

    @property
    def series_path(self) -> Path:
        return self.output_dir / "series.csv"

    @property
    def manifest_path(self) -> Path:
        return self.output_dir / "manifest.txt"

    @staticmethod
    def combination_key(repetition: int, recommender: str, label: str) -> str:
        return f"rep{repetition}/{recommender}/{label}"

    @staticmethod
    def require(path: Path) -> Path:
        """Fail with the expected path when a prerequisite output is missing."""
        if not path.exists():
            raise PipelineError(
                f"missing prerequisite file: {path}",
                details={"expected": str(path)},
            )
        return path


# ============== Cached Artifact Loading ==============
# Keys carry the file's mtime so a rewritten file is never served stale.

def _stamp(path: Path) -> int:
    return path.stat().st_mtime_ns


@lru_cache(maxsize=4)
def _cached_table(dataset_dir: str, stamp: int) -> InteractionTable:
    return read_generic_table(Path(dataset_dir))


@lru_cache(maxsize=8)
def _cached_split(dataset_dir: str, table_stamp: int, split_path: str, stamp: int, seed: int) -> SplitDataset:
    return read_split(_cached_table(dataset_dir, table_stamp), Path(split_path), seed)


@lru_cache(maxsize=32)
def _cached_candidates(path: str, stamp: int) -> dict[str, CandidateList]:
    return read_candidates(Path(path))


@lru_cache(maxsize=8)
def _cached_bias(split_key: tuple, alpha_b: float, sigma: float) -> BiasParams:
    return fit_bias_params(_cached_split(*split_key).train, alpha_b, sigma)


def load_table(dataset_dir: Path) -> InteractionTable:
    RunContext.require(dataset_dir / "interactions.csv")
    return _cached_table(str(dataset_dir), _stamp(dataset_dir / "interactions.csv"))


def _split_key(dataset_dir: Path, split_path: Path, seed: int) -> tuple:
    RunContext.require(dataset_dir / "interactions.csv")
    RunContext.require(split_path)
    return (str(dataset_dir), _stamp(dataset_dir / "interactions.csv"), str(split_path), _stamp(split_path), seed)


def load_split(dataset_dir: Path, split_path: Path, seed: int) -> SplitDataset:
    return _cached_split(*_split_key(dataset_dir, split_path, seed))


def load_bias(dataset_dir: Path, split_path: Path, seed: int, alpha_b: float, sigma: float) -> BiasParams:
    return _cached_bias(_split_key(dataset_dir, split_path, seed), alpha_b, sigma)


def load_candidates(path: Path) -> dict[str, CandidateList]:
    RunContext.require(path)
    return _cached_candidates(str(path), _stamp(path))
