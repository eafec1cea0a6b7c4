"""
Experiment pipeline: configuration, stages and the runner.

Usage:
    from app.pipeline import load_experiment_config, run_all
    manifest = run_all(load_experiment_config(Path("configs/movielens.ini")))
"""

from app.pipeline.config import (
    DatasetConfig,
    ExperimentConfig,
    default_recommenders,
    get_default_config,
    load_experiment_config,
)
from app.pipeline.context import RunContext
from app.pipeline.manifest import RunManifest
from app.pipeline.runner import STAGES, ExperimentRunner, run_all

__all__ = [
    "DatasetConfig",
    "ExperimentConfig",
    "default_recommenders",
    "get_default_config",
    "load_experiment_config",
    "RunContext",
    "RunManifest",
    "STAGES",
    "ExperimentRunner",
    "run_all",
]
