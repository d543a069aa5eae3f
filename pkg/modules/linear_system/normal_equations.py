# modules/linear_system/normal_equations.py
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from modules.differentiation.jacobians import JacobianStore
from modules.graph.evaluation import Linearization
from modules.graph.graph import Graph
from modules.graph.plan import ActivePlan, reduce_slot_contributions, route_slot_contributions
import logging

logger = logging.getLogger(__name__)


@dataclass
class NormalEquations:
    """Gradient and block diagonal of JᵀΩJ at one linearization point (graph precision)"""
    gradient: np.ndarray                 # b = JᵀΩr
    hessian_diagonal: np.ndarray         # diag(JᵀΩJ), before clamping
    vertex_blocks: List[np.ndarray]      # per vertex descriptor, (n_free, k, k)

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.gradient)) and np.all(np.isfinite(self.hessian_diagonal)))


def _free_positions(plan: ActivePlan, v_idx: int, rows: np.ndarray) -> np.ndarray:
    return np.searchsorted(plan.free_rows[v_idx], rows)


def accumulate_normal_equations(graph: Graph, plan: ActivePlan, linearization: Linearization,
                                blocks: List[List[np.ndarray]]) -> NormalEquations:
    """Reduce per-factor JᵀΩr and JᵀΩJ diagonal blocks into the free vertices"""
    dtype = graph.precision.graph_dtype
    per_slot_g, per_slot_h = [], []
    for d_idx, flin in enumerate(linearization.factors):
        omega = flin.weighted_information
        slot_g, slot_h = [], []
        for s, slot_plan in enumerate(plan.slot_plans[d_idx]):
            free = slot_plan.free
            J, W, r = blocks[d_idx][s][free], omega[free], flin.residuals[free]
            slot_g.append(np.einsum('mrk,mrq,mq->mk', J, W, r))
            slot_h.append(np.einsum('mrk,mrq,mql->mkl', J, W, J))
        per_slot_g.append(slot_g)
        per_slot_h.append(slot_h)

    gradient = reduce_slot_contributions(plan, per_slot_g, dtype)

    vertex_blocks = []
    routed = route_slot_contributions(plan, per_slot_h)
    for v_idx, (vdesc, reduction) in enumerate(zip(graph.vertex_descriptors, plan.reductions)):
        k = vdesc.dimension
        out = np.zeros((plan.free_rows[v_idx].size, k, k), dtype=dtype)
        rows, sums = reduction.reduce(routed[v_idx])
        if sums is not None:
            out[_free_positions(plan, v_idx, rows)] = sums
        vertex_blocks.append(out)

    # A factor that uses one vertex in two slots also adds cross terms to that
    # vertex's diagonal block
    for d_idx, fdesc in enumerate(graph.factor_descriptors):
        slots = plan.slot_plans[d_idx]
        omega = linearization.factors[d_idx].weighted_information
        for s1 in range(len(slots)):
            for s2 in range(s1 + 1, len(slots)):
                a, b = slots[s1], slots[s2]
                if a.vertex_descriptor != b.vertex_descriptor:
                    continue
                same = a.free & (a.rows == b.rows)
                if not np.any(same):
                    continue
                J1, J2 = blocks[d_idx][s1][same], blocks[d_idx][s2][same]
                cross = np.einsum('mrk,mrq,mql->mkl', J1, omega[same], J2)
                positions = _free_positions(plan, a.vertex_descriptor, a.rows[same])
                np.add.at(vertex_blocks[a.vertex_descriptor], positions,
                          cross + np.swapaxes(cross, 1, 2))

    diagonal = np.zeros(plan.total_free_dims, dtype=dtype)
    for v_idx, vblocks in enumerate(vertex_blocks):
        diagonal[plan.free_columns[v_idx]] = np.einsum('nkk->nk', vblocks)
    return NormalEquations(gradient, diagonal, vertex_blocks)


def accumulate_gradient_and_diagonal(graph: Graph, plan: ActivePlan, linearization: Linearization,
                                     blocks: List[List[np.ndarray]]) -> Tuple[np.ndarray, np.ndarray]:
    """(b, diag(JᵀΩJ)) over the free columns"""
    normal = accumulate_normal_equations(graph, plan, linearization, blocks)
    return normal.gradient, normal.hessian_diagonal


def clamp_diagonal(hessian_diagonal: np.ndarray, clamp_min: float = 1e-6,
                   clamp_max: float = 1e32) -> np.ndarray:
    return np.clip(hessian_diagonal, clamp_min, clamp_max)


def compute_column_scaling(clamped_diagonal: np.ndarray) -> np.ndarray:
    """D = 1/√diag, so J·diag(D) has a unit Hessian diagonal up to clamping"""
    return 1.0 / np.sqrt(clamped_diagonal)


def unscale_step(scaled_step: np.ndarray, scaling: np.ndarray) -> np.ndarray:
    """Δx = D·Δx̃, back to the original parameter coordinates"""
    return scaling * scaled_step


def damping_vector(damping: float, scaling: np.ndarray, placement: str = 'scaled') -> np.ndarray:
    """λ on the scaled system's diagonal; 'unscaled' applies λ before rescaling (λ·D²)"""
    if placement == 'unscaled':
        return damping * scaling * scaling
    return np.full_like(scaling, damping)


class HessianOperator:
    """Matrix-free (J̃ᵀΩJ̃ + diag(damping))·v built from the graph structure

    The forward sweep evaluates u = Σ_slots J̃·gather(v) per factor, the
    backward sweep scatter-adds J̃ᵀ·Ωu through the segmented reduction plan.
    """

    def __init__(self, plan: ActivePlan, jacobians: JacobianStore, linearization: Linearization,
                 damping: np.ndarray, dtype: np.dtype):
        self.plan = plan
        self.jacobians = jacobians
        self.dtype = np.dtype(dtype)
        self.damping = np.asarray(damping).astype(self.dtype)
        self.omegas = [f.weighted_information.astype(self.dtype) for f in linearization.factors]
        self.products = 0

    def __call__(self, v: np.ndarray) -> np.ndarray:
        self.products += 1
        v = np.asarray(v).astype(self.dtype, copy=False)
        per_slot = []
        for d_idx, omega in enumerate(self.omegas):
            slot_plans = self.plan.slot_plans[d_idx]
            m, r = omega.shape[0], omega.shape[1]
            u = np.zeros((m, r), dtype=self.dtype)
            blocks = []
            for s, slot_plan in enumerate(slot_plans):
                J = self.jacobians.block(d_idx, s, self.dtype)
                blocks.append(J)
                u += np.einsum('mrk,mk->mr', J, self.plan.gather_columns(v, slot_plan.columns))
            w = np.einsum('mrq,mq->mr', omega, u)
            per_slot.append([
                np.einsum('mrk,mr->mk', J[slot_plan.free], w[slot_plan.free])
                for J, slot_plan in zip(blocks, slot_plans)
            ])
        return reduce_slot_contributions(self.plan, per_slot, self.dtype) + self.damping * v


def hessian_vector_product(plan: ActivePlan, jacobians: JacobianStore, linearization: Linearization,
                           damping: np.ndarray, v: np.ndarray, dtype: np.dtype = np.float64) -> np.ndarray:
    """One product (J̃ᵀΩJ̃ + λ)·v; the scaling D lives in the Jacobian store"""
    return HessianOperator(plan, jacobians, linearization, damping, dtype)(v)
