# modules/graph/loss.py
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np

from core.exceptions import GraphError


class LossKind(str, Enum):
    DEFAULT = 'default'
    HUBER = 'huber'


# Integer codes used in the per-factor loss arrays
LOSS_CODES = {LossKind.DEFAULT: 0, LossKind.HUBER: 1}


@dataclass(frozen=True)
class LossParams:
    """Robust loss attached to one factor"""
    kind: LossKind = LossKind.DEFAULT
    delta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, 'kind', LossKind(self.kind))
        if not (self.delta > 0 and np.isfinite(self.delta)):
            raise GraphError(f"Loss delta must be a positive finite scalar, got {self.delta}")

    @property
    def code(self) -> int:
        return LOSS_CODES[self.kind]


def default_loss() -> LossParams:
    return LossParams(LossKind.DEFAULT)


def huber_loss(delta: float) -> LossParams:
    return LossParams(LossKind.HUBER, float(delta))


def rho(s: np.ndarray, codes: np.ndarray, deltas: np.ndarray) -> np.ndarray:
    """Robust cost ρ(s) for squared weighted residual norms s ≥ 0"""
    s = np.asarray(s)
    huber = (np.asarray(codes) == LOSS_CODES[LossKind.HUBER])
    if not np.any(huber):
        return s.copy()
    deltas = np.asarray(deltas, dtype=s.dtype)
    outlier = huber & (s > deltas * deltas)
    with np.errstate(invalid='ignore'):
        robust = 2 * deltas * np.sqrt(s) - deltas * deltas
    return np.where(outlier, robust, s).astype(s.dtype, copy=False)


def rho_prime(s: np.ndarray, codes: np.ndarray, deltas: np.ndarray) -> np.ndarray:
    """ρ′(s), the IRLS weight applied as √ρ′ to residual and Jacobian"""
    s = np.asarray(s)
    weights = np.ones_like(s)
    huber = (np.asarray(codes) == LOSS_CODES[LossKind.HUBER])
    if not np.any(huber):
        return weights
    deltas = np.asarray(deltas, dtype=s.dtype)
    outlier = huber & (s > deltas * deltas)
    with np.errstate(divide='ignore', invalid='ignore'):
        robust = deltas / np.sqrt(s)
    return np.where(outlier, robust, weights).astype(s.dtype, copy=False)


def squared_norms(residuals: np.ndarray, information: np.ndarray) -> np.ndarray:
    """s = rᵀ Ω r for a batch of (n, r) residuals and (n, r, r) information"""
    return np.einsum('ni,nij,nj->n', residuals, information, residuals)


def apply_loss_weighting(residual: np.ndarray, information: np.ndarray,
                         loss: LossParams) -> Tuple[np.ndarray, float]:
    """Single-factor form: return the residual and its weight w = ρ′(rᵀΩr)"""
    residual = np.asarray(residual)
    information = np.asarray(information)
    s = float(residual @ information @ residual)
    w = rho_prime(np.array([s]), np.array([loss.code]), np.array([loss.delta]))
    return residual, float(w[0])
