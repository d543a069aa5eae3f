from abc import ABC, abstractmethod
from enum import Enum
from typing import Any, List, Optional, Sequence

import numpy as np


class DifferentiationMode(str, Enum):
    """How a factor descriptor produces its Jacobian blocks"""
    ANALYTIC = 'analytic'
    AUTO = 'auto'
    # Recomputed at every use site, never stored
    DYNAMIC = 'dynamic'


class VertexTraits(ABC):
    """Behaviour of one vertex type: parameter-block access and in-place update"""

    dimension: int = 0

    @abstractmethod
    def parameters(self, vertex: Any) -> np.ndarray:
        """Return the vertex's flat parameter block (`dimension` scalars)"""
        pass

    @abstractmethod
    def update(self, vertex: Any, delta: np.ndarray) -> None:
        """Apply a step to the externally owned vertex in place"""
        pass

    @abstractmethod
    def assign(self, vertex: Any, block: np.ndarray) -> None:
        """Overwrite the vertex with a parameter block (no update arithmetic)"""
        pass


class ArrayVertexTraits(VertexTraits):
    """Vertices held as numpy arrays (or row views) with additive update"""

    def __init__(self, dimension: int):
        self.dimension = int(dimension)

    def parameters(self, vertex: np.ndarray) -> np.ndarray:
        return np.array(vertex, copy=True).reshape(self.dimension)

    def update(self, vertex: np.ndarray, delta: np.ndarray) -> None:
        vertex += np.asarray(delta, dtype=vertex.dtype).reshape(vertex.shape)

    def assign(self, vertex: np.ndarray, block: np.ndarray) -> None:
        vertex[...] = np.asarray(block, dtype=vertex.dtype).reshape(vertex.shape)


class FactorTraits(ABC):
    """Behaviour of one constraint type

    `error` receives, per slot, a list of parameter components (each an
    array over the batch of factors, or a dual scalar when differentiating)
    and returns the list of residual components. Writing residuals
    component-wise lets one function serve values and duals alike.
    """

    residual_dimension: int = 1
    observation_dimension: int = 1
    # Non-optimizable payload per factor; a 1-byte placeholder when unused
    data_dtype: np.dtype = np.dtype(np.uint8)
    data_shape: tuple = ()

    @abstractmethod
    def error(self, slots: Sequence[Sequence[Any]], observation: np.ndarray,
              data: np.ndarray) -> List[Any]:
        """Residual components for a batch of factors"""
        pass

    def analytic_jacobian(self, slots: Sequence[np.ndarray], observation: np.ndarray,
                          data: np.ndarray, slot: int) -> Optional[np.ndarray]:
        """Closed-form (n, residual_dimension, slot_dimension) block, if supplied"""
        return None

    @property
    def has_analytic_jacobian(self) -> bool:
        return type(self).analytic_jacobian is not FactorTraits.analytic_jacobian
