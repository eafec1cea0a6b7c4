"""
Custom exceptions for the application.

Usage:
    from app.core.exceptions import IngestError
    raise IngestError("malformed row", details={"file": path, "line": 12})
"""

from typing import Any, Dict, Optional


class AppException(Exception):
    """Base exception for all application errors."""

    def __init__(
        self,
        message: str,
        details: Optional[Dict[str, Any]] = None,
        cause: Optional[Exception] = None,
    ):
        super().__init__(message)
        self.message = message
        self.details = details or {}
        self.cause = cause

    def __str__(self) -> str:
        if self.details:
            return f"{self.message} | Details: {self.details}"
        return self.message


class ConfigurationError(AppException):
    """Raised when configuration is invalid or missing."""
    pass


class IngestError(AppException):
    """Raised when a dataset file cannot be parsed or filtering empties it."""

    @property
    def line(self) -> Optional[int]:
        """1-based line number of the offending row, when known."""
        return self.details.get("line")


class RecommenderError(AppException):
    """Raised when a recommender cannot be trained or queried."""
    pass


class CalibrationError(AppException):
    """Raised when a genre distribution or divergence is undefined."""
    pass


class SelectionError(AppException):
    """Raised when a selection problem is invalid or too large for the oracle."""
    pass


class EvaluationError(AppException):
    """Raised when a ranked list cannot be evaluated."""
    pass


class ProtocolError(AppException):
    """Raised when decision coefficients are undefined."""
    pass


class PipelineError(AppException):
    """Raised when a pipeline stage is missing its inputs or fails."""
    pass
