"""Experiment stages in execution order."""

from app.pipeline.stages.base import PipelineStage
from app.pipeline.stages.decide import DecideStage
from app.pipeline.stages.evaluate import EvaluateStage, EvaluateUnit, run_evaluate_unit
from app.pipeline.stages.postprocess import PostprocessStage, PostprocessUnit, run_postprocess_unit
from app.pipeline.stages.preprocess import PreprocessStage, load_raw
from app.pipeline.stages.recommend import RecommendStage

__all__ = [
    "PipelineStage",
    "PreprocessStage",
    "RecommendStage",
    "PostprocessStage",
    "EvaluateStage",
    "DecideStage",
    "PostprocessUnit",
    "EvaluateUnit",
    "run_postprocess_unit",
    "run_evaluate_unit",
    "load_raw",
]
