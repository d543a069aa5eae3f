# modules/graph/plan.py
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .graph import Graph


class SegmentedReduction:
    """Deterministic scatter-add of per-(factor, slot) contributions into vertices

    Contributions arrive as one array per source (factor descriptor, slot),
    each holding the free entries in active-factor order. They are
    concatenated, stably sorted by vertex row and summed segment by segment,
    so the result never depends on how the producing map was scheduled.
    """

    def __init__(self, sources: List[Tuple[int, int]], source_rows: List[np.ndarray]):
        self.sources = sources
        self.source_sizes = [len(rows) for rows in source_rows]
        keys = (np.concatenate(source_rows) if source_rows else np.zeros(0, dtype=np.int64))
        self.order = np.argsort(keys, kind='stable')
        sorted_keys = keys[self.order]
        if sorted_keys.size:
            boundaries = np.flatnonzero(np.diff(sorted_keys)) + 1
            self.starts = np.concatenate([[0], boundaries]).astype(np.int64)
            self.rows = sorted_keys[self.starts]
        else:
            self.starts = np.zeros(0, dtype=np.int64)
            self.rows = np.zeros(0, dtype=np.int64)

    @property
    def size(self) -> int:
        return int(self.order.size)

    def reduce(self, contributions: List[np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
        """Return (vertex rows, summed contributions) for rows with any incidence"""
        if not self.size:
            return self.rows, None
        stacked = np.concatenate(contributions, axis=0)[self.order]
        return self.rows, np.add.reduceat(stacked, self.starts, axis=0)


@dataclass
class SlotPlan:
    """One slot of a factor descriptor restricted to active factors"""
    vertex_descriptor: int
    dimension: int
    rows: np.ndarray      # (m,) vertex row per active factor
    free: np.ndarray      # (m,) bool, vertex is free
    columns: np.ndarray   # (m, dimension) global columns; fixed vertices map to total_free_dims


@dataclass
class ActivePlan:
    """Result of activating a graph at an optimization level"""
    level: int
    total_free_dims: int
    total_residual_dims: int
    column_offsets: List[np.ndarray]        # per vertex descriptor, -1 for fixed
    free_rows: List[np.ndarray]             # per vertex descriptor
    free_columns: List[np.ndarray]          # per vertex descriptor, (n_free, dim)
    factor_masks: List[np.ndarray]          # per factor descriptor, level <= active level
    active_indices: List[np.ndarray]        # per factor descriptor
    slot_plans: List[List[SlotPlan]] = field(default_factory=list)
    reductions: List[SegmentedReduction] = field(default_factory=list)

    @property
    def num_active_factors(self) -> int:
        return int(sum(idx.size for idx in self.active_indices))

    def gather_columns(self, vector: np.ndarray, columns: np.ndarray) -> np.ndarray:
        """Gather vector entries for (m, k) column indices; the padding column reads 0"""
        padded = np.concatenate([vector, np.zeros(1, dtype=vector.dtype)])
        return padded[columns]


def activate(graph: Graph, level: int = 0) -> ActivePlan:
    """Assign column offsets to free vertices and mask factors above `level`

    Offsets follow descriptor registration order, then insertion order.
    """
    column_offsets, free_rows, free_columns = [], [], []
    offset = 0
    for desc in graph.vertex_descriptors:
        fixed = desc.fixed_mask
        offsets = np.full(len(desc), -1, dtype=np.int64)
        rows = np.flatnonzero(~fixed).astype(np.int64)
        offsets[rows] = offset + desc.dimension * np.arange(rows.size, dtype=np.int64)
        offset += desc.dimension * rows.size
        column_offsets.append(offsets)
        free_rows.append(rows)
        free_columns.append(offsets[rows][:, None] + np.arange(desc.dimension, dtype=np.int64))
    total_free = offset

    factor_masks, active_indices, slot_plans = [], [], []
    total_residual = 0
    incidences = [([], []) for _ in graph.vertex_descriptors]
    for d_idx, fdesc in enumerate(graph.factor_descriptors):
        arrays = fdesc.arrays()
        mask = arrays.levels <= level
        active = np.flatnonzero(mask).astype(np.int64)
        factor_masks.append(mask)
        active_indices.append(active)
        total_residual += active.size * fdesc.residual_dimension

        slots = []
        for s, vdesc in enumerate(fdesc.vertex_slots):
            v_idx = graph.vertex_index(vdesc)
            rows = arrays.slot_rows[active, s]
            offsets = column_offsets[v_idx][rows]
            free = offsets >= 0
            columns = np.where(
                free[:, None],
                offsets[:, None] + np.arange(vdesc.dimension, dtype=np.int64),
                total_free,
            )
            slots.append(SlotPlan(v_idx, vdesc.dimension, rows, free, columns))
            sources, source_rows = incidences[v_idx]
            sources.append((d_idx, s))
            source_rows.append(rows[free])
        slot_plans.append(slots)

    reductions = [SegmentedReduction(sources, rows) for sources, rows in incidences]
    return ActivePlan(
        level=level,
        total_free_dims=total_free,
        total_residual_dims=total_residual,
        column_offsets=column_offsets,
        free_rows=free_rows,
        free_columns=free_columns,
        factor_masks=factor_masks,
        active_indices=active_indices,
        slot_plans=slot_plans,
        reductions=reductions,
    )


def scatter_vertex_sums(plan: ActivePlan, per_vertex_contributions: List[List[np.ndarray]],
                        dtype: np.dtype) -> np.ndarray:
    """Reduce (m_free, k) slot contributions into one global free-dims vector

    `per_vertex_contributions[v]` lists arrays in the order of
    `plan.reductions[v].sources`.
    """
    out = np.zeros(plan.total_free_dims, dtype=dtype)
    for v_idx, reduction in enumerate(plan.reductions):
        rows, sums = reduction.reduce(per_vertex_contributions[v_idx])
        if sums is None:
            continue
        columns = plan.column_offsets[v_idx][rows][:, None] + np.arange(sums.shape[1])
        out[columns] = sums
    return out


def route_slot_contributions(plan: ActivePlan, per_slot: List[List[np.ndarray]]) -> List[List[np.ndarray]]:
    """Reorder per-(factor descriptor, slot) arrays into each reduction's source order"""
    return [[per_slot[d][s] for d, s in reduction.sources] for reduction in plan.reductions]


def reduce_slot_contributions(plan: ActivePlan, per_slot: List[List[np.ndarray]],
                              dtype: np.dtype) -> np.ndarray:
    """Scatter-add (m_free, k) per-slot arrays into a free-dims vector"""
    return scatter_vertex_sums(plan, route_slot_contributions(plan, per_slot), dtype)
