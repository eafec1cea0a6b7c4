"""
Evaluation and decision schemas.
"""

from dataclasses import dataclass, field
from typing import Optional

from pydantic import BaseModel, Field

from app.schemas.calibration import DistributionMode, DivergenceKind


class EvaluationConfig(BaseModel):
    """Depth and miscalibration measure used for every system of an experiment."""

    n: int = Field(default=10, ge=1, description="Evaluation depth; prefixes 1..n are assessed")
    eval_divergence: DivergenceKind = Field(default="kl", description="Divergence behind MRMC")
    alpha: float = Field(default=0.01, ge=0, le=1, description="Smoothing of prefix distributions")
    distribution_mode: DistributionMode = Field(default="genre", description="Realized distribution denominator")

    model_config = {"frozen": True}


@dataclass(frozen=True)
class UserEvaluation:
    """Per-user AP, ACE and RMC of one ranked list."""
    user_id: str
    ap: float
    ace: float
    rmc: float


@dataclass(frozen=True)
class SystemEvaluation:
    """Metric means over users, then over repetitions."""
    map_mean: float
    mace_mean: float
    mrmc_mean: float
    users: int = 0
    repetitions: int = 1


@dataclass(frozen=True, order=True)
class SystemId:
    """Recommender x divergence x balance (x lambda) combination."""
    recommender: str
    divergence: str
    balance: str
    lambda_label: Optional[str] = field(default=None)

    @property
    def label(self) -> str:
        base = f"{self.divergence.upper()}-{self.balance.upper()}-{self.recommender}"
        if self.lambda_label in (None, "", "ALL"):
            return base
        return f"{base}@{self.lambda_label}"


@dataclass(frozen=True)
class ProtocolRow:
    """Coefficients of one system; s is always cce + cmc."""
    system: SystemId
    cce: float
    cmc: float

    @property
    def s(self) -> float:
        return self.cce + self.cmc


@dataclass(frozen=True)
class DecisionReport:
    """All protocol rows and the chosen system."""
    rows: tuple[ProtocolRow, ...]
    winner: SystemId
    skipped: tuple[str, ...] = ()

    @property
    def winner_row(self) -> ProtocolRow:
        return next(row for row in self.rows if row.system == self.winner)
