"""
Experiment runner.

Chains stages together for an end-to-end calibration experiment.
"""

import time
from pathlib import Path
from typing import Optional

from app.core.executor import ExecutorManager
from app.core.logging import get_logger
from app.pipeline.config import ExperimentConfig
from app.pipeline.context import RunContext
from app.pipeline.manifest import RunManifest
from app.pipeline.stages import (
    DecideStage,
    EvaluateStage,
    PipelineStage,
    PostprocessStage,
    PreprocessStage,
    RecommendStage,
)

logger = get_logger(__name__)

STAGES: dict[str, type[PipelineStage]] = {
    "preprocess": PreprocessStage,
    "recommend": RecommendStage,
    "postprocess": PostprocessStage,
    "evaluate": EvaluateStage,
    "decide": DecideStage,
}


class ExperimentRunner:
    """
    Orchestrates the experiment stages.

    Stages run in the order they were added and share one RunContext. The
    manifest of an earlier run with the same config is extended, so running
    the stages one by one leaves the same record as a single full run.

    Usage:
        runner = (
            ExperimentRunner(config)
            .add_stage(PreprocessStage())
            .add_stage(RecommendStage())
        )
        manifest = runner.run()
    """

    def __init__(self, config: ExperimentConfig, output_dir: Optional[Path] = None):
        """
        Initialize runner.

        Args:
            config: Experiment configuration
            output_dir: Output root (defaults to ``config.output_dir``)
        """
        self.config = config
        self.output_dir = Path(output_dir or config.output_dir)
        self.stages: list[PipelineStage] = []
        self.context: Optional[RunContext] = None

    def add_stage(self, stage: PipelineStage) -> "ExperimentRunner":
        """
        Add a stage to the runner.

        Returns:
            Self for fluent chaining
        """
        self.stages.append(stage)
        return self

    def _load_manifest(self) -> RunManifest:
        path = self.output_dir / "manifest.txt"
        if path.exists():
            previous = RunManifest.read(path)
            if previous.config_hash == self.config.config_hash:
                return previous
            logger.info("Existing manifest belongs to another config, starting a fresh one")
        return RunManifest(config_hash=self.config.config_hash)

    def run(self) -> RunManifest:
        """
        Execute every stage and write the manifest.

        Returns:
            The run manifest
        """
        logger.info(f"Starting experiment {self.config.dataset.name} in {self.output_dir}")
        logger.info(f"Stages: {[s.name for s in self.stages]}")
        self.output_dir.mkdir(parents=True, exist_ok=True)

        start_time = time.time()
        executor = ExecutorManager(max_workers=self.config.jobs)
        context = RunContext(
            config=self.config,
            output_dir=self.output_dir,
            manifest=self._load_manifest(),
            executor=executor,
        )
        self.context = context

        with executor.executor_context():
            for stage in self.stages:
                try:
                    context = stage.run(context)
                except Exception as e:
                    logger.error(f"Experiment failed at stage {stage.name}: {e}")
                    context.manifest.write(context.manifest_path)
                    raise

        elapsed = time.time() - start_time
        manifest = context.manifest
        manifest.write(context.manifest_path)
        logger.info(f"Experiment complete in {elapsed:.1f}s")
        logger.info(f"Results: {len(manifest.done)} done, {len(manifest.failed)} failed")
        return manifest

    @classmethod
    def create_default(
        cls,
        config: ExperimentConfig,
        output_dir: Optional[Path] = None,
    ) -> "ExperimentRunner":
        """
        Create a runner with every stage, preprocess to decide.

        Returns:
            Configured runner ready to run
        """
        runner = cls(config, output_dir)
        for stage_cls in STAGES.values():
            runner.add_stage(stage_cls())
        return runner

    @classmethod
    def for_stages(
        cls,
        config: ExperimentConfig,
        names: list[str],
        output_dir: Optional[Path] = None,
    ) -> "ExperimentRunner":
        """Runner limited to the named stages, in pipeline order."""
        runner = cls(config, output_dir)
        for name, stage_cls in STAGES.items():
            if name in names:
                runner.add_stage(stage_cls())
        return runner

    def __repr__(self) -> str:
        return f"<ExperimentRunner(stages={[s.name for s in self.stages]})>"


def run_all(config: ExperimentConfig, output_dir: Optional[Path] = None) -> RunManifest:
    """Full pipeline: preprocess, recommend, postprocess, evaluate, decide."""
    return ExperimentRunner.create_default(config, output_dir).run()
