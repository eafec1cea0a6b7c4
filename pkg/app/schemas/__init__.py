"""Typed records shared across the pipeline."""

from app.schemas.dataset import (
    DatasetStats,
    InteractionTable,
    ItemGenres,
    PreprocessConfig,
    RawInteraction,
    SplitDataset,
)
from app.schemas.recommendation import (
    CandidateItem,
    CandidateList,
    RankedList,
    RecommenderConfig,
)
from app.schemas.calibration import (
    BiasParams,
    Distribution,
    LambdaPolicy,
    SmoothingParams,
    TradeOffSpec,
)
from app.schemas.evaluation import (
    DecisionReport,
    EvaluationConfig,
    ProtocolRow,
    SystemEvaluation,
    SystemId,
    UserEvaluation,
)

__all__ = [
    "DatasetStats",
    "InteractionTable",
    "ItemGenres",
    "PreprocessConfig",
    "RawInteraction",
    "SplitDataset",
    "CandidateItem",
    "CandidateList",
    "RankedList",
    "RecommenderConfig",
    "BiasParams",
    "Distribution",
    "LambdaPolicy",
    "SmoothingParams",
    "TradeOffSpec",
    "DecisionReport",
    "EvaluationConfig",
    "ProtocolRow",
    "SystemEvaluation",
    "SystemId",
    "UserEvaluation",
]
