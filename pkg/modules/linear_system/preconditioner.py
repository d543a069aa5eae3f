# modules/linear_system/preconditioner.py
from typing import List, Tuple

import numpy as np

from modules.graph.plan import ActivePlan
from .normal_equations import NormalEquations
import logging

logger = logging.getLogger(__name__)


class IdentityPreconditioner:
    """M = I"""

    fallback_count = 0
    nbytes = 0

    def apply(self, r: np.ndarray) -> np.ndarray:
        return r

    __call__ = apply


class BlockJacobiPreconditioner:
    """Inverse of each free vertex's damped diagonal Hessian block

    Held at graph precision regardless of the linear-system storage precision.
    """

    def __init__(self, inverse_blocks: List[np.ndarray], columns: List[np.ndarray],
                 dtype: np.dtype, fallback_count: int = 0):
        self.inverse_blocks = inverse_blocks
        self.columns = columns
        self.dtype = np.dtype(dtype)
        self.fallback_count = fallback_count

    @property
    def nbytes(self) -> int:
        return int(sum(b.nbytes for b in self.inverse_blocks))

    def apply(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r).astype(self.dtype, copy=False)
        out = np.zeros_like(r)
        for inverse, columns in zip(self.inverse_blocks, self.columns):
            if inverse.shape[0]:
                out[columns] = np.einsum('nkl,nl->nk', inverse, r[columns])
        return out

    __call__ = apply


def invert_blocks(blocks: np.ndarray, clamp_min: float = 1e-6,
                  clamp_max: float = 1e32) -> Tuple[np.ndarray, int]:
    """Batched inverse; numerically singular blocks fall back to a clamped diagonal inverse"""
    n, k = blocks.shape[0], blocks.shape[-1]
    inverse = np.zeros_like(blocks)
    if n == 0:
        return inverse, 0
    finite = np.all(np.isfinite(blocks), axis=(1, 2))
    cond = np.full(n, np.inf)
    if np.any(finite):
        with np.errstate(all='ignore'):
            cond[finite] = np.linalg.cond(blocks[finite].astype(np.float64))
    limit = 1.0 / np.finfo(blocks.dtype).eps
    good = np.isfinite(cond) & (cond < limit)
    if np.any(good):
        inverse[good] = np.linalg.inv(blocks[good])
    bad = ~good
    if np.any(bad):
        diag = np.einsum('nkk->nk', blocks[bad])
        diag = np.clip(np.nan_to_num(diag, nan=clamp_min), clamp_min, clamp_max)
        eye = np.eye(k, dtype=blocks.dtype)
        inverse[bad] = eye[None, :, :] * (1.0 / diag)[:, :, None]
    return inverse, int(bad.sum())


def build_preconditioner(plan: ActivePlan, normal: NormalEquations, scaling: np.ndarray,
                         damping: np.ndarray, dtype: np.dtype, clamp_min: float = 1e-6,
                         clamp_max: float = 1e32) -> BlockJacobiPreconditioner:
    """Invert D·H_vv·D + damping for every free vertex block"""
    dtype = np.dtype(dtype)
    inverse_blocks, fallbacks = [], 0
    for v_idx, blocks in enumerate(normal.vertex_blocks):
        columns = plan.free_columns[v_idx]
        d = scaling[columns]
        scaled = d[:, :, None] * blocks * d[:, None, :]
        k = blocks.shape[-1]
        scaled[:, np.arange(k), np.arange(k)] += damping[columns]
        inverse, bad = invert_blocks(scaled.astype(dtype, copy=False), clamp_min, clamp_max)
        inverse_blocks.append(inverse)
        fallbacks += bad
    if fallbacks:
        logger.warning(f"⚠️ {fallbacks} singular preconditioner blocks replaced by diagonal inverses")
    return BlockJacobiPreconditioner(inverse_blocks, list(plan.free_columns), dtype, fallbacks)
