# modules/linear_system/pcg.py
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from config.settings import SOLVER_DEFAULTS
from core.exceptions import ConfigurationError
from core.precision import PrecisionPair, narrow, widen
import logging

logger = logging.getLogger(__name__)

_PCG_DEFAULTS = SOLVER_DEFAULTS['pcg']

PRECONDITIONERS = ('block_jacobi', 'identity')
NORMALIZATIONS = ('rhs_unit_norm', 'none')


@dataclass
class PCGConfig:
    max_iterations: int = _PCG_DEFAULTS['max_iterations']
    tolerance: float = _PCG_DEFAULTS['tolerance']
    # ≤ 0 disables the low-quality guard
    rejection_ratio: float = _PCG_DEFAULTS['rejection_ratio']
    preconditioner: str = _PCG_DEFAULTS['preconditioner']
    normalization: str = _PCG_DEFAULTS['normalization']

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ConfigurationError(f"PCG max_iterations must be positive, got {self.max_iterations}")
        if not self.tolerance > 0:
            raise ConfigurationError(f"PCG tolerance must be positive, got {self.tolerance}")
        if self.preconditioner not in PRECONDITIONERS:
            raise ConfigurationError(f"Unknown preconditioner '{self.preconditioner}'")
        if self.normalization not in NORMALIZATIONS:
            raise ConfigurationError(f"Unknown PCG normalization '{self.normalization}'")


@dataclass
class PCGStats:
    iterations: int = 0
    final_relative_residual: float = 0.0
    converged: bool = True
    indefinite: bool = False
    low_quality: bool = False


def _dot(a: np.ndarray, b: np.ndarray, dtype: np.dtype) -> float:
    return float(np.sum(a.astype(dtype, copy=False) * b.astype(dtype, copy=False), dtype=dtype))


def pcg_solve(hvp: Callable[[np.ndarray], np.ndarray], preconditioner: Callable[[np.ndarray], np.ndarray],
              b: np.ndarray, config: PCGConfig,
              precision: PrecisionPair = PrecisionPair()) -> Tuple[np.ndarray, PCGStats]:
    """Preconditioned conjugate gradients from x₀ = 0

    Workspace vectors are stored at system precision and widened for
    arithmetic; dot products and the α/β recurrences run at graph precision.
    With 'rhs_unit_norm' the right-hand side is scaled to unit norm and the
    solution rescaled afterwards.
    """
    gdt, sdt, cdt = precision.graph_dtype, precision.storage_dtype, precision.compute_dtype
    b = np.asarray(b, dtype=gdt)
    n = b.size
    b_norm = np.sqrt(_dot(b, b, gdt))
    if n == 0 or b_norm == 0.0:
        return np.zeros(n, dtype=gdt), PCGStats(iterations=0, final_relative_residual=0.0, converged=True)
    if not np.isfinite(b_norm):
        logger.warning("⚠️ Non-finite right-hand side, skipping PCG")
        return np.zeros(n, dtype=gdt), PCGStats(converged=False, final_relative_residual=float('nan'))

    scale = b_norm if config.normalization == 'rhs_unit_norm' else 1.0
    rhs = narrow(b / gdt.type(scale), sdt)
    rhs_norm = np.sqrt(_dot(rhs, rhs, gdt))

    x = np.zeros(n, dtype=sdt)
    r = rhs.copy()
    z = narrow(preconditioner(widen(r, cdt)), sdt)
    p = z.copy()
    rz = _dot(r, z, gdt)
    stats = PCGStats(converged=False, final_relative_residual=1.0)

    for k in range(config.max_iterations):
        Ap = narrow(hvp(widen(p, cdt)), sdt)
        pAp = _dot(p, Ap, gdt)
        if not pAp > 0.0:
            # Loss of definiteness from rounding: keep the best iterate so far
            stats.indefinite = True
            logger.debug(f"PCG stopped at iteration {k}: pᵀAp = {pAp}")
            break
        alpha = rz / pAp
        x = narrow(widen(x, cdt) + cdt.type(alpha) * widen(p, cdt), sdt)
        r = narrow(widen(r, cdt) - cdt.type(alpha) * widen(Ap, cdt), sdt)
        stats.iterations = k + 1
        stats.final_relative_residual = float(np.sqrt(_dot(r, r, gdt)) / rhs_norm)
        if stats.final_relative_residual <= config.tolerance:
            stats.converged = True
            break
        z = narrow(preconditioner(widen(r, cdt)), sdt)
        rz_next = _dot(r, z, gdt)
        beta = rz_next / rz
        p = narrow(widen(z, cdt) + cdt.type(beta) * widen(p, cdt), sdt)
        rz = rz_next

    if (not stats.converged and config.rejection_ratio > 0
            and stats.final_relative_residual > config.rejection_ratio * config.tolerance):
        stats.low_quality = True
    logger.debug(f"PCG: {stats.iterations} iterations, relative residual "
                 f"{stats.final_relative_residual:.3e}, converged={stats.converged}")
    return x.astype(gdt) * gdt.type(scale), stats
