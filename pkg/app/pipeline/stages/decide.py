"""
Decide stage: protocol coefficients and the winning system.
"""

from app.evaluation.metrics import read_metrics
from app.pipeline.context import RunContext
from app.pipeline.stages.base import PipelineStage
from app.protocol.decision import decision_report, write_decision


class DecideStage(PipelineStage):
    """Reads ``metrics.csv`` and writes ``decision.csv`` plus ``winner.txt``."""

    @property
    def name(self) -> str:
        return "decide"

    def process(self, context: RunContext) -> RunContext:
        frame = read_metrics(context.require(context.metrics_path))
        report = decision_report(frame, pool_lambdas=context.config.pool_lambdas)
        csv_path, winner_path = write_decision(report, context.output_dir)
        context.manifest.record_output("decision", csv_path, context.output_dir)
        context.manifest.record_output("winner", winner_path, context.output_dir)
        context.report = report
        return context
