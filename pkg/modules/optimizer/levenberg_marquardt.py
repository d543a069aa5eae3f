# modules/optimizer/levenberg_marquardt.py
from dataclasses import dataclass, field
from typing import List, Optional, Tuple
import time

import numpy as np

from config.config import WORKERS
from config.settings import SOLVER_DEFAULTS
from core.exceptions import ConfigurationError, OptimizationError
from modules.differentiation.jacobians import JacobianStore, evaluate_blocks, materialize_jacobians
from modules.graph.evaluation import Linearization, linearize
from modules.graph.graph import Graph
from modules.graph.plan import ActivePlan, activate
from modules.linear_system.normal_equations import (HessianOperator, NormalEquations,
                                                    accumulate_normal_equations, clamp_diagonal,
                                                    compute_column_scaling, damping_vector,
                                                    unscale_step)
from modules.linear_system.pcg import PCGConfig, pcg_solve
from modules.linear_system.preconditioner import IdentityPreconditioner, build_preconditioner
from .report import IterationRecord, SolveReport, account_memory
import logging

logger = logging.getLogger(__name__)

_LM_DEFAULTS = SOLVER_DEFAULTS['lm']
_DAMPING_DEFAULTS = SOLVER_DEFAULTS['damping']

DAMPING_PLACEMENTS = ('scaled', 'unscaled')


@dataclass
class LMConfig:
    max_iterations: int = _LM_DEFAULTS['max_iterations']
    # Relative chi² decrease below which an accepted step ends the run
    tolerance: float = _LM_DEFAULTS['tolerance']
    level: int = _LM_DEFAULTS['level']
    initial_damping_factor: float = _LM_DEFAULTS['initial_damping_factor']
    pcg: PCGConfig = field(default_factory=PCGConfig)
    relinearize_every_iteration: bool = False
    workers: int = WORKERS
    clamp_min: float = SOLVER_DEFAULTS['clamp_min']
    clamp_max: float = SOLVER_DEFAULTS['clamp_max']
    damping_placement: str = _LM_DEFAULTS['damping_placement']
    damping_ceiling: float = _LM_DEFAULTS['damping_ceiling']
    gradient_floor: float = _LM_DEFAULTS['gradient_floor']
    initial_nu: float = _DAMPING_DEFAULTS['initial_nu']
    min_decrease: float = _DAMPING_DEFAULTS['min_decrease']

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ConfigurationError(f"max_iterations must be positive, got {self.max_iterations}")
        if not self.tolerance > 0:
            raise ConfigurationError(f"tolerance must be positive, got {self.tolerance}")
        if not 0 <= self.level <= 255:
            raise ConfigurationError(f"level must be in [0, 255], got {self.level}")
        if not self.initial_damping_factor > 0:
            raise ConfigurationError("initial_damping_factor must be positive")
        if self.damping_placement not in DAMPING_PLACEMENTS:
            raise ConfigurationError(f"Unknown damping placement '{self.damping_placement}'")
        if not 0 < self.clamp_min < self.clamp_max:
            raise ConfigurationError("Diagonal clamp bounds must satisfy 0 < min < max")
        if self.initial_nu < 2:
            raise ConfigurationError("initial_nu must be at least 2")
        self.workers = max(1, int(self.workers))


def update_damping(damping: float, nu: float, accepted: bool, gain_ratio: float,
                   min_decrease: float = 1.0 / 3.0) -> Tuple[float, float]:
    """Nielsen gain-ratio schedule, returns (λ′, ν′)"""
    if accepted:
        factor = max(min_decrease, 1.0 - (2.0 * gain_ratio - 1.0) ** 3)
        return damping * factor, 2.0
    return damping * nu, 2.0 * nu


def initialize_damping(scaled_diagonal: np.ndarray, tau: float) -> float:
    """λ₀ = τ·max(diagonal of the scaled system); an empty free set gives τ"""
    scaled_diagonal = np.asarray(scaled_diagonal)
    if scaled_diagonal.size == 0:
        return float(tau)
    return float(tau * np.max(scaled_diagonal))


@dataclass
class Snapshot:
    """Parameter blocks of every free vertex, per vertex descriptor"""
    rows: List[np.ndarray]
    blocks: List[np.ndarray]


def take_snapshot(graph: Graph, plan: ActivePlan) -> Snapshot:
    # binary64 holds any float handle exactly, so restore is bit-identical
    blocks = [
        vdesc.gather(np.float64, rows)
        for vdesc, rows in zip(graph.vertex_descriptors, plan.free_rows)
    ]
    return Snapshot(rows=list(plan.free_rows), blocks=blocks)


def restore_snapshot(graph: Graph, snapshot: Snapshot) -> None:
    """Write snapshot blocks back through the vertex assign op"""
    for vdesc, rows, blocks in zip(graph.vertex_descriptors, snapshot.rows, snapshot.blocks):
        vdesc.assign_rows(rows, blocks)


def apply_step(graph: Graph, plan: ActivePlan, step: np.ndarray) -> None:
    """In-place update of every free vertex with its slice of Δx"""
    for vdesc, rows, columns in zip(graph.vertex_descriptors, plan.free_rows, plan.free_columns):
        if rows.size:
            vdesc.update_rows(rows, step[columns])


@dataclass
class LinearSystem:
    """Everything derived from one linearization point"""
    linearization: Linearization
    normal: NormalEquations
    scaling: np.ndarray
    jacobians: JacobianStore

    @property
    def finite(self) -> bool:
        return self.normal.finite and self.jacobians.finite

    @property
    def rhs(self) -> np.ndarray:
        """−D·b, the scaled right-hand side"""
        return -(self.scaling * self.normal.gradient)

    @property
    def gradient_max_norm(self) -> float:
        gradient = self.normal.gradient
        return float(np.max(np.abs(gradient))) if gradient.size else 0.0

    @property
    def scaled_diagonal(self) -> np.ndarray:
        return self.normal.hessian_diagonal * self.scaling * self.scaling


def build_linear_system(graph: Graph, plan: ActivePlan, linearization: Linearization,
                        config: LMConfig) -> LinearSystem:
    blocks = evaluate_blocks(graph, linearization, workers=config.workers)
    normal = accumulate_normal_equations(graph, plan, linearization, blocks)
    clamped = clamp_diagonal(normal.hessian_diagonal, config.clamp_min, config.clamp_max)
    scaling = compute_column_scaling(clamped)
    jacobians = materialize_jacobians(graph, plan, linearization, scaling, blocks,
                                      workers=config.workers)
    return LinearSystem(linearization, normal, scaling, jacobians)


def predicted_decrease(scaled_step: np.ndarray, damping: np.ndarray, scaled_rhs: np.ndarray) -> float:
    """Model decrease Δx̃ᵀ(λΔx̃ − b̃) of the linearized chi²"""
    return float(np.dot(scaled_step, damping * scaled_step + scaled_rhs))


def _relative_decrease(before: float, after: float) -> float:
    if before == 0.0:
        return 0.0
    return (before - after) / before


def levenberg_marquardt(graph: Graph, config: Optional[LMConfig] = None) -> SolveReport:
    """Optimize the graph in place and return the solve trace"""
    config = config or LMConfig()
    precision = graph.precision
    start = time.perf_counter()

    plan = activate(graph, config.level)
    report = SolveReport(
        free_dims=plan.total_free_dims,
        residual_dims=plan.total_residual_dims,
        memory_accounting=account_memory(graph, plan, config.pcg.preconditioner),
    )

    linearization = linearize(graph, plan, config.workers)
    chi2 = linearization.chi2
    if not np.isfinite(chi2):
        logger.error(f"❌ Initial chi² is not finite ({chi2}); check vertex initialization")
        raise OptimizationError(f"Non-finite chi² at entry: {chi2}")
    report.initial_chi2 = report.final_chi2 = chi2
    logger.info(f"🚀 LM start: chi²={chi2:.6e}, free dims {plan.total_free_dims}, "
                f"residual dims {plan.total_residual_dims}, {precision.label}")

    if plan.total_free_dims == 0:
        report.stop_reason = 'no_free_parameters'
        report.total_time = time.perf_counter() - start
        logger.info("ℹ️ No free parameters, nothing to optimize")
        return report

    system = build_linear_system(graph, plan, linearization, config)
    damping = initialize_damping(system.scaled_diagonal, config.initial_damping_factor)
    nu = config.initial_nu

    for iteration in range(1, config.max_iterations + 1):
        report.iterations_run = iteration
        iteration_start = time.perf_counter()

        if not system.finite:
            report.stop_reason = 'non_finite_jacobian'
            logger.warning("⚠️ Non-finite gradient or Jacobian, stopping")
            break
        if system.gradient_max_norm < config.gradient_floor:
            report.stop_reason = 'small_gradient'
            logger.info(f"✅ Gradient max-norm {system.gradient_max_norm:.3e} below floor")
            break

        damp = damping_vector(damping, system.scaling, config.damping_placement)
        if config.pcg.preconditioner == 'block_jacobi':
            preconditioner = build_preconditioner(plan, system.normal, system.scaling, damp,
                                                  precision.graph_dtype, config.clamp_min,
                                                  config.clamp_max)
        else:
            preconditioner = IdentityPreconditioner()
        report.preconditioner_fallbacks += preconditioner.fallback_count

        operator = HessianOperator(plan, system.jacobians, system.linearization, damp,
                                   precision.compute_dtype)
        rhs = system.rhs
        scaled_step, stats = pcg_solve(operator, preconditioner, rhs, config.pcg, precision)
        step_damping = damping
        if stats.low_quality:
            logger.warning(f"⚠️ Low-quality PCG solve (relative residual "
                           f"{stats.final_relative_residual:.3e}), raising damping")
            damping *= nu

        step = unscale_step(scaled_step, system.scaling)
        snapshot = take_snapshot(graph, plan)
        apply_step(graph, plan, step)
        candidate = linearize(graph, plan, config.workers)
        chi2_after = candidate.chi2
        accepted = bool(np.isfinite(chi2_after) and chi2_after < chi2)

        predicted = predicted_decrease(scaled_step, damp, rhs)
        actual = chi2 - chi2_after if np.isfinite(chi2_after) else -np.inf
        gain = actual / predicted if predicted > 0 else 0.0

        if not accepted:
            restore_snapshot(graph, snapshot)
            if not np.isfinite(chi2_after):
                logger.warning("⚠️ Non-finite candidate chi², step rejected")
        damping, nu = update_damping(damping, nu, accepted, gain, config.min_decrease)

        report.iterations.append(IterationRecord(
            iteration=iteration,
            chi2_before=chi2,
            chi2_after=float(chi2_after),
            damping=float(step_damping),
            pcg_iterations=stats.iterations,
            pcg_converged=stats.converged,
            pcg_relative_residual=stats.final_relative_residual,
            accepted=accepted,
            gain_ratio=float(gain),
            low_quality=stats.low_quality,
            wall_time=time.perf_counter() - iteration_start,
        ))
        logger.info(f"🔁 iter {iteration}: chi² {chi2:.6e} → {chi2_after:.6e} "
                    f"{'accepted' if accepted else 'rejected'}, λ={step_damping:.3e}, "
                    f"PCG {stats.iterations} its")

        if accepted:
            decrease = _relative_decrease(chi2, chi2_after)
            chi2 = chi2_after
            report.final_chi2 = chi2
            system = build_linear_system(graph, plan, candidate, config)
            if decrease < config.tolerance:
                report.stop_reason = 'converged'
                logger.info(f"✅ Converged: relative decrease {decrease:.3e}")
                break
        elif config.relinearize_every_iteration:
            system = build_linear_system(graph, plan, linearize(graph, plan, config.workers), config)

        if damping > config.damping_ceiling:
            report.stop_reason = 'damping_overflow'
            logger.warning(f"⚠️ Damping {damping:.3e} exceeded ceiling, stopping")
            break

    report.total_time = time.perf_counter() - start
    logger.info(f"🏁 LM done: chi² {report.initial_chi2:.6e} → {report.final_chi2:.6e}, "
                f"{report.accepted_steps}/{report.iterations_run} accepted, {report.stop_reason}")
    return report
