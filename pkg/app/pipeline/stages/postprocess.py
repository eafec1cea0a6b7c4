"""
Postprocess stage: greedy calibrated selection for every point of the grid.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from app.core.exceptions import AppException, PipelineError
from app.core.logging import get_logger
from app.pipeline.context import RunContext, load_bias, load_candidates, load_split
from app.pipeline.stages.base import PipelineStage
from app.schemas.calibration import TradeOffSpec
from app.selection.greedy import rerank_users, write_rankings

logger = get_logger(__name__)


@dataclass(frozen=True)
class PostprocessUnit:
    """One (repetition, recommender, trade-off) combination; picklable for worker processes."""
    key: str
    dataset_dir: Path
    split_path: Path
    split_seed: int
    candidates_path: Path
    output_path: Path
    spec: TradeOffSpec
    n: int
    alpha_b: float
    sigma: float


def run_postprocess_unit(unit: PostprocessUnit) -> tuple[str, Optional[str]]:
    """
    Re-rank every user of one combination and write the rankings file.

    Returns:
        (key, error text or None)
    """
    try:
        dataset = load_split(unit.dataset_dir, unit.split_path, unit.split_seed)
        bias = load_bias(unit.dataset_dir, unit.split_path, unit.split_seed, unit.alpha_b, unit.sigma)
        lists = load_candidates(unit.candidates_path)
        rankings = rerank_users(lists, dataset.train, unit.spec, bias, unit.n)
        if not rankings:
            raise PipelineError("no user could be re-ranked", details={"combination": unit.key})
        write_rankings(rankings, unit.output_path)
        return unit.key, None
    except AppException as e:
        logger.error(f"Post-processing {unit.key} failed: {e}")
        unit.output_path.unlink(missing_ok=True)
        return unit.key, str(e)


class PostprocessStage(PipelineStage):
    """
    Produces ``rep_<r>/rankings/<recommender>/<div>-<bal>-<lambda>.csv``.

    Combinations run on the shared executor; results are collected in grid
    order so the manifest does not depend on the number of workers.
    """

    @property
    def name(self) -> str:
        return "postprocess"

    def units(self, context: RunContext) -> list[PostprocessUnit]:
        config = context.config
        units = []
        for repetition in range(config.repetitions):
            context.require(context.split_path(repetition))
            for rec in config.recommenders:
                candidates_path = context.candidates_path(repetition, rec.name)
                for divergence in config.divergences:
                    for balance in config.balances:
                        for label in config.lambdas:
                            spec = config.trade_off(divergence, balance, label)
                            key = context.combination_key(repetition, rec.name, spec.label)
                            units.append(
                                PostprocessUnit(
                                    key=key,
                                    dataset_dir=context.dataset_dir,
                                    split_path=context.split_path(repetition),
                                    split_seed=context.split_seed(repetition),
                                    candidates_path=candidates_path,
                                    output_path=context.rankings_path(repetition, rec.name, spec.label),
                                    spec=spec,
                                    n=config.n,
                                    alpha_b=config.alpha_b,
                                    sigma=config.sigma,
                                )
                            )
        return units

    def process(self, context: RunContext) -> RunContext:
        units = self.units(context)
        available = [unit for unit in units if unit.candidates_path.exists()]
        if units and not available:
            context.require(units[0].candidates_path)

        for unit in units:
            if not unit.candidates_path.exists() and unit.key not in context.manifest.errors:
                context.manifest.mark_failed(unit.key, f"candidates unavailable: {unit.candidates_path}")

        self.logger.info(f"Post-processing {len(available)} combinations on {context.executor.max_workers} worker(s)")
        for key, error in context.executor.map_ordered(run_postprocess_unit, available):
            if error is None:
                context.manifest.mark_done(key)
            else:
                context.manifest.mark_failed(key, error)
        return context
