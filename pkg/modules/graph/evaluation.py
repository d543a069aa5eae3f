# modules/graph/evaluation.py
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np

from core.utils import parallel_map
from .descriptors import FactorDescriptor
from .graph import Graph
from .loss import rho, rho_prime, squared_norms
from .plan import ActivePlan, activate
import logging

logger = logging.getLogger(__name__)


def split_components(block: np.ndarray) -> List[np.ndarray]:
    """(m, k) parameter array -> k component arrays of length m"""
    return [block[:, k] for k in range(block.shape[1])]


def stack_components(components: Sequence, m: int, dtype: np.dtype) -> np.ndarray:
    """Residual component list -> (m, r) array; scalars broadcast over the batch"""
    columns = [np.broadcast_to(np.asarray(c, dtype=dtype), (m,)) for c in components]
    return np.stack(columns, axis=1).astype(dtype, copy=False)


def evaluate_residuals(descriptor: FactorDescriptor, slot_params: Sequence[np.ndarray],
                       observations: np.ndarray, data: np.ndarray, dtype: np.dtype,
                       workers: int = 1) -> np.ndarray:
    """Residuals of a batch of factors; a pure map over entries"""
    m = observations.shape[0]
    r = descriptor.residual_dimension

    def run(start: int, stop: int) -> np.ndarray:
        slots = [split_components(p[start:stop]) for p in slot_params]
        with np.errstate(all='ignore'):
            components = descriptor.traits.error(slots, observations[start:stop], data[start:stop])
        return stack_components(components, stop - start, dtype)

    if m == 0:
        return np.zeros((0, r), dtype=dtype)
    return np.concatenate(parallel_map(run, m, workers), axis=0)


def residual(descriptor: FactorDescriptor, factor_index: int,
             dtype: np.dtype = np.float64) -> np.ndarray:
    """Residual vector of a single factor at the current vertex values"""
    arrays = descriptor.arrays()
    descriptor.check_index(factor_index)
    slot_params = [
        vdesc.gather(dtype, [arrays.slot_rows[factor_index, s]])
        for s, vdesc in enumerate(descriptor.vertex_slots)
    ]
    obs = arrays.observations[factor_index:factor_index + 1].astype(dtype)
    data = arrays.data[factor_index:factor_index + 1]
    return evaluate_residuals(descriptor, slot_params, obs, data, dtype)[0]


@dataclass
class FactorLinearization:
    """Active entries of one factor descriptor evaluated at a linearization point"""
    slot_params: List[np.ndarray]   # per slot, (m, k)
    observations: np.ndarray        # (m, obs)
    data: np.ndarray
    information: np.ndarray         # (m, r, r)
    residuals: np.ndarray           # (m, r)
    weights: np.ndarray             # (m,), ρ′(s)
    costs: np.ndarray               # (m,), ρ(s)

    @property
    def weighted_information(self) -> np.ndarray:
        """ρ′·Ω, equivalent to scaling residual and Jacobian by √ρ′"""
        return self.weights[:, None, None] * self.information


@dataclass
class Linearization:
    vertex_params: List[np.ndarray]
    factors: List[FactorLinearization]
    chi2: float


def linearize(graph: Graph, plan: ActivePlan, workers: int = 1) -> Linearization:
    """Gather parameters and evaluate residuals, loss weights and chi²"""
    dtype = graph.precision.graph_dtype
    vertex_params = [desc.gather(dtype) for desc in graph.vertex_descriptors]
    factors = []
    for d_idx, fdesc in enumerate(graph.factor_descriptors):
        arrays = fdesc.arrays()
        active = plan.active_indices[d_idx]
        slot_params = [
            vertex_params[slot.vertex_descriptor][slot.rows] for slot in plan.slot_plans[d_idx]
        ]
        observations = arrays.observations[active].astype(dtype)
        data = arrays.data[active]
        information = arrays.information[active].astype(dtype)
        residuals = evaluate_residuals(fdesc, slot_params, observations, data, dtype, workers)
        s = squared_norms(residuals, information)
        codes = arrays.loss_codes[active]
        deltas = arrays.loss_deltas[active].astype(dtype)
        factors.append(FactorLinearization(
            slot_params=slot_params,
            observations=observations,
            data=data,
            information=information,
            residuals=residuals,
            weights=rho_prime(s, codes, deltas),
            costs=rho(s, codes, deltas),
        ))
    costs = [f.costs for f in factors]
    chi2 = float(np.sum(np.concatenate(costs))) if costs else 0.0
    return Linearization(vertex_params=vertex_params, factors=factors, chi2=chi2)


def total_error(graph: Graph, level_or_plan: Union[int, ActivePlan, None] = None,
                workers: int = 1) -> float:
    """chi² = Σ ρ(rᵀΩr) over active factors (no ½ factor); nan/inf if non-finite"""
    if isinstance(level_or_plan, ActivePlan):
        plan = level_or_plan
    else:
        plan = activate(graph, level_or_plan or 0)
    return linearize(graph, plan, workers).chi2
