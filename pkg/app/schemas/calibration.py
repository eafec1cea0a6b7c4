"""
Calibration schemas: genre distributions and trade-off parameters.
"""

import math
from dataclasses import dataclass, field
from typing import Literal, Mapping, Optional, Sequence

import numpy as np

from app.core.exceptions import CalibrationError

DivergenceKind = Literal["kl", "he", "chi"]
Balance = Literal["lin", "log"]
LambdaKind = Literal["constant", "var", "cgr"]
DistributionMode = Literal["genre", "steck"]

DIVERGENCES: tuple[DivergenceKind, ...] = ("kl", "he", "chi")
BALANCES: tuple[Balance, ...] = ("lin", "log")

NORMALIZATION_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class Distribution:
    """
    Probability mass over a fixed, ordered genre universe.

    ``raw`` keeps the per-genre values before renormalisation when the
    distribution was derived from a profile or list.
    """
    genres: tuple[str, ...]
    probs: np.ndarray
    raw: Optional[np.ndarray] = None

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float).copy()
        if probs.shape != (len(self.genres),):
            raise CalibrationError(
                "distribution does not match its genre universe",
                details={"genres": len(self.genres), "shape": probs.shape},
            )
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise CalibrationError("distribution has negative or non-finite mass")
        total = float(probs.sum())
        if abs(total - 1.0) > NORMALIZATION_TOLERANCE:
            raise CalibrationError("distribution does not sum to 1", details={"sum": total})
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        if self.raw is not None:
            raw = np.asarray(self.raw, dtype=float).copy()
            raw.setflags(write=False)
            object.__setattr__(self, "raw", raw)

    @classmethod
    def uniform(cls, genres: Sequence[str]) -> "Distribution":
        return cls(tuple(genres), np.full(len(genres), 1.0 / len(genres)))

    def __getitem__(self, genre: str) -> float:
        try:
            return float(self.probs[self.genres.index(genre)])
        except ValueError:
            return 0.0

    def same_universe(self, other: "Distribution") -> bool:
        return self.genres == other.genres


@dataclass(frozen=True)
class SmoothingParams:
    """Mixing weight alpha of q~ = (1 - alpha) q + alpha p."""
    alpha: float = 0.01

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise CalibrationError("smoothing alpha must lie in [0, 1]", details={"alpha": self.alpha})


@dataclass(frozen=True)
class BiasParams:
    """Global mean and per-item biases of the LOG trade-off."""
    mu: float
    alpha_b: float = 0.01
    sigma: float = 0.01
    item_bias: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.alpha_b <= 0 or self.sigma <= 0:
            raise CalibrationError(
                "bias regularisers must be positive",
                details={"alpha_b": self.alpha_b, "sigma": self.sigma},
            )

    def bias_of(self, item_id: str) -> float:
        """b_i, 0 for items unseen in training."""
        return float(self.item_bias.get(item_id, 0.0))


@dataclass(frozen=True)
class LambdaPolicy:
    """How the per-user trade-off weight is chosen: a constant, VAR or CGR."""
    kind: LambdaKind = "constant"
    value: float = 0.0

    def __post_init__(self):
        if self.kind == "constant" and not 0.0 <= self.value <= 1.0:
            raise CalibrationError("constant lambda must lie in [0, 1]", details={"value": self.value})

    @property
    def label(self) -> str:
        if self.kind == "constant":
            # grid points keep one decimal, anything finer keeps its full value
            if self.value == round(self.value, 1):
                return f"{self.value:.1f}"
            return repr(float(self.value))
        return self.kind

    @classmethod
    def parse(cls, label: str) -> "LambdaPolicy":
        """Inverse of ``label``: ``0.3`` -> constant, ``var`` / ``cgr`` -> adaptive."""
        text = label.strip().lower()
        if text in ("var", "cgr"):
            return cls(kind=text)  # type: ignore[arg-type]
        try:
            return cls(kind="constant", value=float(text))
        except ValueError as e:
            raise CalibrationError("unknown lambda policy", details={"label": label}, cause=e)

    @classmethod
    def default_grid(cls) -> list["LambdaPolicy"]:
        """The eleven constants 0.0..1.0 plus VAR and CGR."""
        return [cls("constant", round(0.1 * step, 1)) for step in range(11)] + [cls("var"), cls("cgr")]


@dataclass(frozen=True)
class TradeOffSpec:
    """One point of the divergence x balance x lambda grid."""
    balance: Balance = "lin"
    divergence: DivergenceKind = "kl"
    lambda_policy: LambdaPolicy = field(default_factory=LambdaPolicy)
    smoothing: SmoothingParams = field(default_factory=SmoothingParams)
    distribution_mode: DistributionMode = "genre"
    log_base: float = math.e

    def __post_init__(self):
        if self.balance not in BALANCES:
            raise CalibrationError("unknown trade-off balance", details={"balance": self.balance})
        if self.divergence not in DIVERGENCES:
            raise CalibrationError("unknown divergence", details={"divergence": self.divergence})
        if self.distribution_mode not in ("genre", "steck"):
            raise CalibrationError("unknown distribution mode", details={"mode": self.distribution_mode})
        if self.log_base <= 0 or self.log_base == 1:
            raise CalibrationError("log base must be positive and not 1", details={"log_base": self.log_base})

    @property
    def label(self) -> str:
        return f"{self.divergence}-{self.balance}-{self.lambda_policy.label}"
