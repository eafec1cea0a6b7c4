"""
Abstract base class for experiment stages.
"""

import time
from abc import ABC, abstractmethod

from app.core.logging import get_logger
from app.pipeline.context import RunContext


class PipelineStage(ABC):
    """
    Abstract base class for all experiment stages.

    Each stage reads its inputs from the run's output directory, writes its
    own outputs there and records statuses in the manifest.

    Usage:
        class MyStage(PipelineStage):
            @property
            def name(self) -> str:
                return "my_stage"

            def process(self, context: RunContext) -> RunContext:
                # Read inputs, write outputs
                return context
    """

    def __init__(self):
        self._logger = None

    @property
    @abstractmethod
    def name(self) -> str:
        """Stage name for logging, timings and the CLI."""
        pass

    @abstractmethod
    def process(self, context: RunContext) -> RunContext:
        """
        Run the stage.

        Args:
            context: Shared run state

        Returns:
            The same context, possibly enriched
        """
        pass

    @property
    def logger(self):
        """Get logger for this stage."""
        if self._logger is None:
            self._logger = get_logger(f"pipeline.{self.name}")
        return self._logger

    def setup(self, context: RunContext) -> None:
        """Optional hook called before processing."""
        pass

    def teardown(self, context: RunContext) -> None:
        """Optional hook called after processing."""
        pass

    def run(self, context: RunContext) -> RunContext:
        """
        Execute the stage with timing and logging.

        The elapsed time is recorded in the manifest; errors are logged and
        re-raised.
        """
        self.logger.info(f"Starting stage: {self.name}")
        start_time = time.time()

        try:
            self.setup(context)
            result = self.process(context)
            self.teardown(context)

            elapsed = (time.time() - start_time) * 1000
            context.manifest.record_timing(self.name, elapsed)
            self.logger.info(f"Completed stage: {self.name} ({elapsed:.1f}ms)")

            return result

        except Exception as e:
            elapsed = (time.time() - start_time) * 1000
            self.logger.error(f"Stage {self.name} failed after {elapsed:.1f}ms: {e}")
            raise

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__}(name={self.name})>"
