# modules/graph/descriptors.py
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from core.base_traits import DifferentiationMode, FactorTraits, VertexTraits
from core.exceptions import ConfigurationError, GraphError
from .loss import LossParams
import logging

logger = logging.getLogger(__name__)


class VertexDescriptor:
    """Homogeneous batch of optimizable variables of one type"""

    def __init__(self, traits: VertexTraits, name: Optional[str] = None):
        if traits.dimension < 1:
            raise ConfigurationError(f"Vertex dimension must be positive, got {traits.dimension}")
        self.traits = traits
        self.name = name or type(traits).__name__
        self.ids: List[int] = []
        self.handles: List[Any] = []
        self.fixed: List[bool] = []
        self._index: Dict[int, int] = {}

    @property
    def dimension(self) -> int:
        return self.traits.dimension

    def __len__(self) -> int:
        return len(self.ids)

    def reserve(self, capacity: int) -> None:
        """Capacity hint only; nothing is pre-allocated, the backing lists grow on demand"""
        logger.debug(f"Reserving {capacity} vertices for {self.name}")

    def add_vertex(self, vertex_id: int, handle: Any) -> None:
        """Append a vertex; it starts free"""
        if vertex_id in self._index:
            raise GraphError(f"Duplicate vertex id {vertex_id} in descriptor {self.name}")
        self._index[vertex_id] = len(self.ids)
        self.ids.append(vertex_id)
        self.handles.append(handle)
        self.fixed.append(False)

    def index_of(self, vertex_id: int) -> int:
        try:
            return self._index[vertex_id]
        except KeyError:
            raise GraphError(f"Unknown vertex id {vertex_id} in descriptor {self.name}") from None

    def contains(self, vertex_id: int) -> bool:
        return vertex_id in self._index

    def set_fixed(self, vertex_id: int, flag: bool) -> None:
        self.fixed[self.index_of(vertex_id)] = bool(flag)

    def is_fixed(self, vertex_id: int) -> bool:
        return self.fixed[self.index_of(vertex_id)]

    @property
    def fixed_mask(self) -> np.ndarray:
        return np.array(self.fixed, dtype=bool)

    def parameters(self, vertex_id: int) -> np.ndarray:
        return self.traits.parameters(self.handles[self.index_of(vertex_id)])

    def gather(self, dtype: np.dtype, rows: Optional[np.ndarray] = None) -> np.ndarray:
        """Stack parameter blocks of the given rows (all rows by default)"""
        if rows is None:
            rows = range(len(self.handles))
        blocks = [self.traits.parameters(self.handles[row]) for row in rows]
        if not blocks:
            return np.zeros((0, self.dimension), dtype=dtype)
        return np.stack(blocks).astype(dtype, copy=False)

    def update_rows(self, rows: np.ndarray, deltas: np.ndarray) -> None:
        """Apply per-row steps in place through the trait update"""
        for row, delta in zip(rows, deltas):
            self.traits.update(self.handles[row], delta)

    def assign_rows(self, rows: np.ndarray, blocks: np.ndarray) -> None:
        for row, block in zip(rows, blocks):
            self.traits.assign(self.handles[row], block)


@dataclass
class FactorArrays:
    """Column-oriented view of a factor descriptor's entries"""
    slot_rows: np.ndarray      # (n, arity) vertex rows per slot
    observations: np.ndarray   # (n, observation_dimension)
    information: np.ndarray    # (n, r, r)
    data: np.ndarray           # (n, *data_shape)
    loss_codes: np.ndarray     # (n,)
    loss_deltas: np.ndarray    # (n,)
    levels: np.ndarray         # (n,)


class FactorDescriptor:
    """Homogeneous batch of constraints of one type"""

    def __init__(self, traits: FactorTraits, vertex_descriptors: Sequence[VertexDescriptor],
                 mode: DifferentiationMode = DifferentiationMode.AUTO,
                 name: Optional[str] = None):
        if traits.residual_dimension < 1:
            raise ConfigurationError("Residual dimension must be at least 1")
        if not vertex_descriptors:
            raise ConfigurationError("A factor descriptor needs at least one vertex slot")
        mode = DifferentiationMode(mode)
        if mode is DifferentiationMode.ANALYTIC and not traits.has_analytic_jacobian:
            raise ConfigurationError(
                f"{type(traits).__name__} has no analytic Jacobian; use auto or dynamic mode"
            )
        self.traits = traits
        self.vertex_slots = list(vertex_descriptors)
        self.mode = mode
        self.name = name or type(traits).__name__
        self._slot_ids: List[tuple] = []
        self._slot_rows: List[tuple] = []
        self._observations: List[np.ndarray] = []
        self._information: List[np.ndarray] = []
        self._data: List[np.ndarray] = []
        self._losses: List[LossParams] = []
        self._levels: List[int] = []
        self._arrays: Optional[FactorArrays] = None

    @property
    def residual_dimension(self) -> int:
        return self.traits.residual_dimension

    @property
    def arity(self) -> int:
        return len(self.vertex_slots)

    @property
    def slot_dimensions(self) -> List[int]:
        return [desc.dimension for desc in self.vertex_slots]

    def __len__(self) -> int:
        return len(self._slot_rows)

    def reserve(self, capacity: int) -> None:
        """Capacity hint only; entries are stacked into arrays on first use"""
        logger.debug(f"Reserving {capacity} factors for {self.name}")

    def add_factor(self, vertex_ids: Sequence[int], observation: Any,
                   information: Optional[np.ndarray] = None, data: Any = None,
                   loss: Optional[LossParams] = None) -> int:
        """Append a factor at level 0; absent information means identity"""
        vertex_ids = tuple(vertex_ids)
        if len(vertex_ids) != self.arity:
            raise GraphError(
                f"{self.name} expects {self.arity} vertex ids, got {len(vertex_ids)}"
            )
        rows = []
        for slot, (desc, vertex_id) in enumerate(zip(self.vertex_slots, vertex_ids)):
            if not desc.contains(vertex_id):
                raise GraphError(
                    f"{self.name}: slot {slot} references unknown vertex id {vertex_id} "
                    f"in descriptor {desc.name}"
                )
            rows.append(desc.index_of(vertex_id))

        r = self.residual_dimension
        obs = np.asarray(observation, dtype=np.float64).reshape(-1)
        if obs.size != self.traits.observation_dimension:
            raise GraphError(
                f"{self.name}: observation has {obs.size} values, "
                f"expected {self.traits.observation_dimension}"
            )

        if information is None:
            info = np.eye(r, dtype=np.float64)
        else:
            info = np.array(information, dtype=np.float64).reshape(r, r)
            if not np.allclose(info, info.T, rtol=1e-12, atol=1e-12):
                raise GraphError(f"{self.name}: information matrix is not symmetric")
            if np.linalg.eigvalsh(info).min() < -1e-12 * max(1.0, np.abs(info).max()):
                raise GraphError(f"{self.name}: information matrix is not positive semi-definite")

        if data is None:
            payload = np.zeros(self.traits.data_shape, dtype=self.traits.data_dtype)
        else:
            payload = np.asarray(data, dtype=self.traits.data_dtype).reshape(self.traits.data_shape)

        self._slot_ids.append(vertex_ids)
        self._slot_rows.append(tuple(rows))
        self._observations.append(obs)
        self._information.append(info)
        self._data.append(payload)
        self._losses.append(loss or LossParams())
        self._levels.append(0)
        self._arrays = None
        return len(self._slot_rows) - 1

    def check_index(self, factor_index: int) -> None:
        if not 0 <= factor_index < len(self._slot_rows):
            raise GraphError(
                f"{self.name}: factor index {factor_index} out of range [0, {len(self._slot_rows)})"
            )

    def set_level(self, factor_index: int, level: int) -> None:
        self.check_index(factor_index)
        if not 0 <= int(level) <= 255:
            raise GraphError(f"Level must fit in 8 bits, got {level}")
        self._levels[factor_index] = int(level)
        self._arrays = None

    def level(self, factor_index: int) -> int:
        self.check_index(factor_index)
        return self._levels[factor_index]

    def information(self, factor_index: int) -> np.ndarray:
        self.check_index(factor_index)
        return self._information[factor_index].copy()

    def loss(self, factor_index: int) -> LossParams:
        self.check_index(factor_index)
        return self._losses[factor_index]

    def set_loss(self, factor_index: int, loss: LossParams) -> None:
        self.check_index(factor_index)
        self._losses[factor_index] = loss
        self._arrays = None

    def vertex_ids(self, factor_index: int) -> tuple:
        self.check_index(factor_index)
        return self._slot_ids[factor_index]

    def arrays(self) -> FactorArrays:
        """Column-oriented entry arrays, rebuilt after any modification"""
        if self._arrays is None:
            n = len(self._slot_rows)
            r = self.residual_dimension
            self._arrays = FactorArrays(
                slot_rows=np.array(self._slot_rows, dtype=np.int64).reshape(n, self.arity),
                observations=np.array(self._observations, dtype=np.float64).reshape(
                    n, self.traits.observation_dimension),
                information=np.array(self._information, dtype=np.float64).reshape(n, r, r),
                data=np.array(self._data, dtype=self.traits.data_dtype).reshape(
                    (n,) + tuple(self.traits.data_shape)),
                loss_codes=np.array([loss.code for loss in self._losses], dtype=np.int8),
                loss_deltas=np.array([loss.delta for loss in self._losses], dtype=np.float64),
                levels=np.array(self._levels, dtype=np.uint8),
            )
        return self._arrays
