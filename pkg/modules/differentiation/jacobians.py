# modules/differentiation/jacobians.py
from typing import List, Optional, Sequence

import numpy as np

from core.base_traits import DifferentiationMode
from core.exceptions import ConfigurationError
from core.precision import PrecisionPair, narrow
from core.utils import parallel_map
from modules.graph.descriptors import FactorDescriptor
from modules.graph.evaluation import FactorLinearization, split_components
from modules.graph.graph import Graph
from modules.graph.plan import ActivePlan, SlotPlan
from .dual import DualScalar
import logging

logger = logging.getLogger(__name__)


def _derivative_column(components: Sequence, m: int, dtype: np.dtype) -> np.ndarray:
    column = []
    for c in components:
        deriv = c.deriv if isinstance(c, DualScalar) else 0.0
        column.append(np.broadcast_to(np.asarray(deriv, dtype=dtype), (m,)))
    return np.stack(column, axis=1)


def auto_blocks(descriptor: FactorDescriptor, slot_params: Sequence[np.ndarray],
                observations: np.ndarray, data: np.ndarray, slot: int,
                dtype: np.dtype, workers: int = 1) -> np.ndarray:
    """(m, r, k) Jacobian of one slot by per-column dual passes

    Column j is produced by one residual evaluation with the slot's inputs
    replaced by duals, partial j seeded to 1 and the others to 0.
    """
    dtype = np.dtype(dtype)
    m = observations.shape[0]
    r = descriptor.residual_dimension
    k = slot_params[slot].shape[1]

    def run(start: int, stop: int) -> np.ndarray:
        n = stop - start
        plain = [split_components(p[start:stop]) for p in slot_params]
        one, zero = np.ones(n, dtype=dtype), dtype.type(0)
        block = np.empty((n, r, k), dtype=dtype)
        for column in range(k):
            slots = list(plain)
            slots[slot] = [
                DualScalar(value, one if j == column else zero)
                for j, value in enumerate(plain[slot])
            ]
            with np.errstate(all='ignore'):
                outputs = descriptor.traits.error(slots, observations[start:stop], data[start:stop])
            block[:, :, column] = _derivative_column(outputs, n, dtype)
        return block

    if m == 0:
        return np.zeros((0, r, k), dtype=dtype)
    return np.concatenate(parallel_map(run, m, workers), axis=0)


def analytic_blocks(descriptor: FactorDescriptor, slot_params: Sequence[np.ndarray],
                    observations: np.ndarray, data: np.ndarray, slot: int,
                    dtype: np.dtype, workers: int = 1) -> np.ndarray:
    """(m, r, k) closed-form Jacobian of one slot"""
    m = observations.shape[0]
    r = descriptor.residual_dimension
    k = slot_params[slot].shape[1]

    def run(start: int, stop: int) -> np.ndarray:
        with np.errstate(all='ignore'):
            block = descriptor.traits.analytic_jacobian(
                [p[start:stop] for p in slot_params], observations[start:stop],
                data[start:stop], slot)
        return np.asarray(block, dtype=dtype).reshape(stop - start, r, k)

    if m == 0:
        return np.zeros((0, r, k), dtype=dtype)
    return np.concatenate(parallel_map(run, m, workers), axis=0)


def evaluate_slot_blocks(descriptor: FactorDescriptor, linearization: FactorLinearization,
                         slot: int, dtype: np.dtype, mode: Optional[DifferentiationMode] = None,
                         workers: int = 1) -> np.ndarray:
    """Jacobian blocks of one slot; dynamic mode prefers the analytic form"""
    mode = DifferentiationMode(mode or descriptor.mode)
    use_analytic = (mode is DifferentiationMode.ANALYTIC
                    or (mode is DifferentiationMode.DYNAMIC and descriptor.traits.has_analytic_jacobian))
    evaluate = analytic_blocks if use_analytic else auto_blocks
    return evaluate(descriptor, linearization.slot_params, linearization.observations,
                    linearization.data, slot, dtype, workers)


def evaluate_blocks(graph: Graph, linearization, mode: Optional[DifferentiationMode] = None,
                    workers: int = 1) -> List[List[np.ndarray]]:
    """Graph-precision Jacobian blocks for every factor descriptor and slot"""
    dtype = graph.precision.graph_dtype
    blocks = []
    for fdesc, flin in zip(graph.factor_descriptors, linearization.factors):
        blocks.append([
            evaluate_slot_blocks(fdesc, flin, s, dtype, mode, workers)
            for s in range(fdesc.arity)
        ])
    return blocks


def _single_entry(descriptor: FactorDescriptor, factor_index: int, dtype: np.dtype):
    arrays = descriptor.arrays()
    descriptor.check_index(factor_index)
    slot_params = [
        vdesc.gather(dtype, [arrays.slot_rows[factor_index, s]])
        for s, vdesc in enumerate(descriptor.vertex_slots)
    ]
    obs = arrays.observations[factor_index:factor_index + 1].astype(dtype)
    data = arrays.data[factor_index:factor_index + 1]
    return slot_params, obs, data


def jacobian_auto(descriptor: FactorDescriptor, factor_index: int, slot: int,
                  dtype: np.dtype = np.float64) -> np.ndarray:
    """(r, k) block of one factor and slot by forward differentiation"""
    slot_params, obs, data = _single_entry(descriptor, factor_index, dtype)
    return auto_blocks(descriptor, slot_params, obs, data, slot, dtype)[0]


def jacobian_analytic(descriptor: FactorDescriptor, factor_index: int, slot: int,
                      dtype: np.dtype = np.float64) -> np.ndarray:
    """(r, k) closed-form block of one factor and slot"""
    if not descriptor.traits.has_analytic_jacobian:
        raise ConfigurationError(f"{descriptor.name} has no analytic Jacobian")
    slot_params, obs, data = _single_entry(descriptor, factor_index, dtype)
    return analytic_blocks(descriptor, slot_params, obs, data, slot, dtype)[0]


def scale_block(block: np.ndarray, slot_plan: SlotPlan, plan: ActivePlan,
                scaling: np.ndarray) -> np.ndarray:
    """J̃ = J·diag(D) restricted to the slot's columns; fixed slots scale to zero"""
    d = plan.gather_columns(scaling.astype(block.dtype, copy=False), slot_plan.columns)
    return block * d[:, None, :]


class StoredJacobians:
    """Scaled blocks of one factor descriptor held at system precision"""

    def __init__(self, blocks: List[np.ndarray]):
        self.blocks = blocks

    @property
    def nbytes(self) -> int:
        return int(sum(b.nbytes for b in self.blocks))

    @property
    def block_count(self) -> int:
        return int(sum(b.shape[0] for b in self.blocks))

    def block(self, slot: int, dtype: np.dtype) -> np.ndarray:
        return self.blocks[slot].astype(dtype, copy=False)


class DynamicJacobians:
    """Recomputes scaled blocks at graph precision at every use; stores nothing"""

    def __init__(self, descriptor: FactorDescriptor, linearization: FactorLinearization,
                 slot_plans: List[SlotPlan], plan: ActivePlan, scaling: np.ndarray,
                 dtype: np.dtype, workers: int = 1):
        self.descriptor = descriptor
        self.linearization = linearization
        self.slot_plans = slot_plans
        self.plan = plan
        self.scaling = scaling
        self.dtype = np.dtype(dtype)
        self.workers = workers

    nbytes = 0
    block_count = 0

    def block(self, slot: int, dtype: np.dtype) -> np.ndarray:
        raw = evaluate_slot_blocks(self.descriptor, self.linearization, slot, self.dtype,
                                   DifferentiationMode.DYNAMIC, self.workers)
        scaled = scale_block(raw, self.slot_plans[slot], self.plan, self.scaling)
        return scaled.astype(dtype, copy=False)


class JacobianStore:
    """Per-descriptor Jacobian sources for one linearization point"""

    def __init__(self, entries: List, scaling: np.ndarray, finite: bool = True):
        self.entries = entries
        self.scaling = scaling
        self.finite = finite

    def block(self, descriptor_index: int, slot: int, dtype: np.dtype) -> np.ndarray:
        return self.entries[descriptor_index].block(slot, dtype)

    @property
    def jacobian_bytes(self) -> int:
        return int(sum(entry.nbytes for entry in self.entries))

    @property
    def block_count(self) -> int:
        return int(sum(entry.block_count for entry in self.entries))


def materialize_jacobians(graph: Graph, plan: ActivePlan, linearization, scaling: np.ndarray,
                          blocks: Optional[List[List[np.ndarray]]] = None,
                          mode: Optional[DifferentiationMode] = None,
                          workers: int = 1) -> JacobianStore:
    """Fill stored descriptors at system precision, or wrap dynamic ones

    `blocks` may carry graph-precision blocks already evaluated at this
    linearization point; `mode` overrides every descriptor's own mode.
    """
    precision: PrecisionPair = graph.precision
    entries, finite = [], True
    for d_idx, (fdesc, flin) in enumerate(zip(graph.factor_descriptors, linearization.factors)):
        effective = DifferentiationMode(mode or fdesc.mode)
        slot_plans = plan.slot_plans[d_idx]
        if effective is DifferentiationMode.DYNAMIC:
            entries.append(DynamicJacobians(fdesc, flin, slot_plans, plan, scaling,
                                            precision.graph_dtype, workers))
            continue
        if effective is DifferentiationMode.ANALYTIC and not fdesc.traits.has_analytic_jacobian:
            raise ConfigurationError(f"{fdesc.name} has no analytic Jacobian")
        stored = []
        for s in range(fdesc.arity):
            raw = (blocks[d_idx][s] if blocks is not None else
                   evaluate_slot_blocks(fdesc, flin, s, precision.graph_dtype, effective, workers))
            if not np.all(np.isfinite(raw)):
                finite = False
            scaled = scale_block(raw, slot_plans[s], plan, scaling)
            stored.append(narrow(scaled, precision.storage_dtype))
        entries.append(StoredJacobians(stored))
    if not finite:
        logger.warning("⚠️ Non-finite Jacobian entries at this linearization point")
    return JacobianStore(entries, scaling, finite)
