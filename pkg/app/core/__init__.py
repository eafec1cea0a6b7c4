"""Core utilities and base classes."""

from app.core.logging import get_logger, setup_logging
from app.core.exceptions import (
    AppException,
    CalibrationError,
    ConfigurationError,
    EvaluationError,
    IngestError,
    PipelineError,
    ProtocolError,
    RecommenderError,
    SelectionError,
)
from app.core.seeding import derive_seed, rng_for

__all__ = [
    "get_logger",
    "setup_logging",
    "AppException",
    "CalibrationError",
    "ConfigurationError",
    "EvaluationError",
    "IngestError",
    "PipelineError",
    "ProtocolError",
    "RecommenderError",
    "SelectionError",
    "derive_seed",
    "rng_for",
]
