"""
Miscalibration measures between a target p and a (smoothed) realized q.

    kl  = sum p log2(p / q~)              terms with p = 0 contribute 0
    he  = sqrt(2 sum (sqrt p - sqrt q)^2) evaluated on the unsmoothed q
    chi = sum (p - q~)^2 / q~             terms with p = q~ = 0 contribute 0

kl and chi are undefined when p has mass where q~ has none.

The array functions accept q as a single vector or as a stack of rows and
return one value per row; the greedy selector scores every remaining
candidate in one call.
"""

from typing import Optional

import numpy as np

from app.core.exceptions import CalibrationError
from app.schemas.calibration import Distribution, DivergenceKind


def _check_support(p: np.ndarray, q: np.ndarray) -> None:
    if np.any((p > 0) & (q <= 0)):
        raise CalibrationError("unsmoothed zero support")


def kl_values(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    _check_support(p, q)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0) / np.where(q > 0, q, 1.0)), 0.0)
    return terms.sum(axis=-1)


def hellinger_values(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    return np.sqrt(2.0 * ((np.sqrt(p) - np.sqrt(q)) ** 2).sum(axis=-1))


def chi_square_values(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    _check_support(p, q)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(q > 0, (p - q) ** 2 / np.where(q > 0, q, 1.0), 0.0)
    return terms.sum(axis=-1)


def divergence_values(
    kind: DivergenceKind,
    p: np.ndarray,
    q_tilde: np.ndarray,
    q: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Array form of ``divergence``.

    Args:
        kind: ``kl``, ``he`` or ``chi``
        p: Target vector
        q_tilde: Smoothed realized vector(s)
        q: Unsmoothed realized vector(s), used by ``he``; defaults to q_tilde
    """
    if kind == "kl":
        values = kl_values(p, q_tilde)
    elif kind == "chi":
        values = chi_square_values(p, q_tilde)
    elif kind == "he":
        values = hellinger_values(p, q_tilde if q is None else q)
    else:
        raise CalibrationError("unknown divergence", details={"kind": kind})
    # rounding can push an exact match a hair below zero
    return np.maximum(values, 0.0)


def divergence(
    kind: DivergenceKind,
    p: Distribution,
    q_tilde: Distribution,
    q: Optional[Distribution] = None,
) -> float:
    """
    Miscalibration of q~ against p.

    Raises:
        CalibrationError: "unsmoothed zero support" for kl/chi when p > 0 where q~ = 0
    """
    if not p.same_universe(q_tilde) or (q is not None and not p.same_universe(q)):
        raise CalibrationError("distributions use different genre universes")
    value = divergence_values(kind, p.probs, q_tilde.probs, None if q is None else q.probs)
    return float(value)
