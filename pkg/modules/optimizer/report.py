# modules/optimizer/report.py
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

import numpy as np

from core.base_traits import DifferentiationMode
from modules.graph.graph import Graph
from modules.graph.plan import ActivePlan

# Number of free-dims vectors PCG keeps at system precision (x, r, z, p, Ap)
PCG_WORKSPACE_VECTORS = 5
# Graph-precision free-dims vectors of the linear system (b, diagonal, D)
SYSTEM_STATE_VECTORS = 3


@dataclass
class MemoryAccount:
    """Bytes implied by element counts and widths; no allocator baseline"""
    jacobian_bytes: int = 0
    preconditioner_bytes: int = 0
    workspace_bytes: int = 0
    graph_bytes: int = 0

    @property
    def total_bytes(self) -> int:
        return self.jacobian_bytes + self.preconditioner_bytes + self.workspace_bytes + self.graph_bytes

    def to_dict(self) -> Dict:
        data = asdict(self)
        data['total_bytes'] = self.total_bytes
        return data


def account_memory(graph: Graph, plan: ActivePlan, preconditioner: str = 'block_jacobi',
                   mode: Optional[DifferentiationMode] = None) -> MemoryAccount:
    """Analytic memory account for one activation of the graph"""
    precision = graph.precision
    g_width = precision.graph_dtype.itemsize
    s_width = precision.storage_dtype.itemsize

    jacobian = 0
    for d_idx, fdesc in enumerate(graph.factor_descriptors):
        effective = DifferentiationMode(mode or fdesc.mode)
        if effective is DifferentiationMode.DYNAMIC:
            continue
        m = plan.active_indices[d_idx].size
        jacobian += m * sum(fdesc.residual_dimension * k for k in fdesc.slot_dimensions) * s_width

    precond = 0
    if preconditioner == 'block_jacobi':
        for v_idx, vdesc in enumerate(graph.vertex_descriptors):
            precond += plan.free_rows[v_idx].size * vdesc.dimension ** 2 * g_width

    n = plan.total_free_dims
    workspace = PCG_WORKSPACE_VECTORS * n * s_width + SYSTEM_STATE_VECTORS * n * g_width

    graph_bytes = sum(len(v) * v.dimension * g_width for v in graph.vertex_descriptors)
    for fdesc in graph.factor_descriptors:
        r = fdesc.residual_dimension
        per_factor_scalars = fdesc.traits.observation_dimension + r * r + 1  # + loss delta
        data_bytes = np.dtype(fdesc.traits.data_dtype).itemsize * int(np.prod(fdesc.traits.data_shape))
        # vertex indices (8 bytes each), level and loss kind (1 byte each)
        per_factor_fixed = fdesc.arity * 8 + 2 + data_bytes
        graph_bytes += len(fdesc) * (per_factor_scalars * g_width + per_factor_fixed)

    return MemoryAccount(int(jacobian), int(precond), int(workspace), int(graph_bytes))


@dataclass
class IterationRecord:
    iteration: int
    chi2_before: float
    chi2_after: float
    damping: float
    pcg_iterations: int
    pcg_converged: bool
    pcg_relative_residual: float
    accepted: bool
    gain_ratio: float
    low_quality: bool
    wall_time: float


@dataclass
class SolveReport:
    """Per-iteration trace and summary of one Levenberg-Marquardt run

    chi² omits the ½ of the least-squares objective.
    """
    initial_chi2: float = 0.0
    final_chi2: float = 0.0
    iterations: List[IterationRecord] = field(default_factory=list)
    iterations_run: int = 0
    stop_reason: str = 'max_iterations'
    total_time: float = 0.0
    memory_accounting: MemoryAccount = field(default_factory=MemoryAccount)
    preconditioner_fallbacks: int = 0
    free_dims: int = 0
    residual_dims: int = 0

    @property
    def accepted_steps(self) -> int:
        return sum(1 for it in self.iterations if it.accepted)

    @property
    def chi2_trace(self) -> List[float]:
        """chi² of the current state after each iteration"""
        return [it.chi2_after if it.accepted else it.chi2_before for it in self.iterations]

    def to_dict(self) -> Dict:
        return {
            'initial_chi2': self.initial_chi2,
            'final_chi2': self.final_chi2,
            'iterations_run': self.iterations_run,
            'accepted_steps': self.accepted_steps,
            'stop_reason': self.stop_reason,
            'total_time': self.total_time,
            'preconditioner_fallbacks': self.preconditioner_fallbacks,
            'free_dims': self.free_dims,
            'residual_dims': self.residual_dims,
            'memory_account': self.memory_accounting.to_dict(),
            'trace': [asdict(it) for it in self.iterations],
        }
