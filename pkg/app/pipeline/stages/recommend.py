"""
Recommend stage: train each recommender per repetition and persist its candidates.
"""

from pathlib import Path

from app.core.exceptions import AppException
from app.pipeline.context import RunContext, load_split, load_table
from app.pipeline.stages.base import PipelineStage
from app.recommend import generate_candidates, load_external_predictions, mae, train, write_candidates
from app.schemas.recommendation import RecommenderConfig


class RecommendStage(PipelineStage):
    """
    Produces ``rep_<r>/candidates/<recommender>.csv``.

    Built-in recommenders are trained on the repetition's train fold;
    external ones are read from their predictions file with the user's
    training items removed. A failing recommender is recorded in the
    manifest and the others carry on.
    """

    @property
    def name(self) -> str:
        return "recommend"

    def process(self, context: RunContext) -> RunContext:
        config = context.config
        table = load_table(context.dataset_dir)

        for repetition in range(config.repetitions):
            dataset = load_split(context.dataset_dir, context.split_path(repetition), context.split_seed(repetition))
            for rec in config.recommenders:
                key = f"rep{repetition}/{rec.name}/candidates"
                try:
                    if rec.algorithm == "external":
                        lists = load_external_predictions(
                            Path(rec.predictions_path),
                            rec.candidate_size,
                            catalog=table.items,
                            train=dataset.train,
                        )
                    else:
                        lists = self._train_and_rank(context, rec, dataset, repetition)
                    path = write_candidates(lists, context.candidates_path(repetition, rec.name))
                    context.manifest.record_output(key, path, context.output_dir)
                    context.manifest.mark_done(key)
                except (AppException, FileNotFoundError) as e:
                    self.logger.error(f"{rec.name} failed in repetition {repetition}: {e}")
                    context.manifest.mark_failed(key, e)
                    context.candidates_path(repetition, rec.name).unlink(missing_ok=True)
        return context

    def _train_and_rank(self, context: RunContext, rec: RecommenderConfig, dataset, repetition: int):
        seeded = rec.model_copy(update={"seed": context.model_seed(repetition)})
        model = train(dataset.train, seeded, context.config.dataset.domain)
        self.logger.info(f"{rec.name} test MAE (repetition {repetition}): {mae(model, dataset.test):.4f}")
        return generate_candidates(model, dataset.train, rec.candidate_size)
