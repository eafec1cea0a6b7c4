"""
Calibrated Recommendation Pipeline Application Package.

This package provides an offline pipeline for:
- Dataset ingestion, filtering and per-user splitting
- Candidate generation with collaborative-filtering recommenders
- Genre-calibrated re-ranking with greedy selection
- Precision and calibration metrics and the coefficient decision protocol
"""

from app.config import settings

__version__ = "1.0.0"
__all__ = ["settings"]
