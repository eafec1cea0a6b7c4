"""
Evaluate stage: per-user AP/ACE/RMC for every ranked combination, then
metrics.csv and the lambda series.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from app.core.exceptions import AppException, PipelineError
from app.core.logging import get_logger
from app.evaluation.metrics import (
    aggregate,
    evaluate_users,
    lambda_series,
    metrics_frame,
    write_metrics,
    write_user_evaluations,
)
from app.pipeline.context import RunContext, load_split
from app.pipeline.stages.base import PipelineStage
from app.schemas.evaluation import EvaluationConfig, SystemEvaluation, SystemId
from app.selection.greedy import read_rankings

logger = get_logger(__name__)


@dataclass(frozen=True)
class EvaluateUnit:
    """One ranked combination to evaluate; picklable for worker processes."""
    key: str
    system: SystemId
    repetition: int
    dataset_dir: Path
    split_path: Path
    split_seed: int
    rankings_path: Path
    output_path: Path
    evaluation: EvaluationConfig


def run_evaluate_unit(unit: EvaluateUnit) -> tuple[str, Optional[SystemEvaluation], Optional[str]]:
    """
    Evaluate one combination and write its per-user CSV.

    Returns:
        (key, repetition means or None, error text or None)
    """
    try:
        dataset = load_split(unit.dataset_dir, unit.split_path, unit.split_seed)
        rankings = read_rankings(unit.rankings_path)
        users = evaluate_users(rankings, dataset.train, dataset.test, unit.evaluation)
        write_user_evaluations(users, unit.output_path)
        return unit.key, aggregate([users]), None
    except (AppException, FileNotFoundError) as e:
        logger.error(f"Evaluating {unit.key} failed: {e}")
        return unit.key, None, str(e)


class EvaluateStage(PipelineStage):
    """Produces per-user evaluation CSVs, ``metrics.csv`` and ``series.csv``."""

    @property
    def name(self) -> str:
        return "evaluate"

    def units(self, context: RunContext) -> list[EvaluateUnit]:
        config = context.config
        units = []
        for repetition in range(config.repetitions):
            context.require(context.split_path(repetition))
            for rec in config.recommenders:
                for divergence in config.divergences:
                    for balance in config.balances:
                        for label in config.lambdas:
                            spec = config.trade_off(divergence, balance, label)
                            units.append(
                                EvaluateUnit(
                                    key=context.combination_key(repetition, rec.name, spec.label),
                                    system=SystemId(rec.name, divergence, balance, spec.lambda_policy.label),
                                    repetition=repetition,
                                    dataset_dir=context.dataset_dir,
                                    split_path=context.split_path(repetition),
                                    split_seed=context.split_seed(repetition),
                                    rankings_path=context.rankings_path(repetition, rec.name, spec.label),
                                    output_path=context.evaluation_path(repetition, rec.name, spec.label),
                                    evaluation=config.evaluation,
                                )
                            )
        return units

    def process(self, context: RunContext) -> RunContext:
        units = self.units(context)
        available = [unit for unit in units if unit.rankings_path.exists()]
        if units and not available:
            context.require(units[0].rankings_path)
        for unit in units:
            if not unit.rankings_path.exists() and unit.key not in context.manifest.errors:
                context.manifest.mark_failed(unit.key, f"rankings unavailable: {unit.rankings_path}")

        self.logger.info(f"Evaluating {len(available)} combinations on {context.executor.max_workers} worker(s)")
        records = []
        by_key = {unit.key: unit for unit in available}
        for key, evaluation, error in context.executor.map_ordered(run_evaluate_unit, available):
            if error is None:
                unit = by_key[key]
                records.append((unit.system, unit.repetition, evaluation))
                context.manifest.mark_done(key)
            else:
                context.manifest.mark_failed(key, error)

        if not records:
            raise PipelineError("no combination could be evaluated")

        frame = metrics_frame(records)
        write_metrics(frame, context.metrics_path)
        lambda_series(frame).to_csv(context.series_path, index=False)
        context.manifest.record_output("metrics", context.metrics_path, context.output_dir)
        context.manifest.record_output("series", context.series_path, context.output_dir)
        self.logger.info(f"Wrote {len(frame)} metric rows to {context.metrics_path.name}")
        return context
