# modules/graph/graph.py
from typing import List, Optional

from core.exceptions import GraphError
from core.precision import PrecisionPair
from .descriptors import FactorDescriptor, VertexDescriptor
import logging

logger = logging.getLogger(__name__)


class Graph:
    """The optimization problem: ordered vertex and factor descriptors"""

    def __init__(self, precision: Optional[PrecisionPair] = None):
        self.precision = precision or PrecisionPair()
        self.vertex_descriptors: List[VertexDescriptor] = []
        self.factor_descriptors: List[FactorDescriptor] = []

    def add_vertex_descriptor(self, descriptor: VertexDescriptor) -> VertexDescriptor:
        if any(d is descriptor for d in self.vertex_descriptors):
            raise GraphError(f"Vertex descriptor {descriptor.name} already registered")
        self.vertex_descriptors.append(descriptor)
        return descriptor

    def add_factor_descriptor(self, descriptor: FactorDescriptor) -> FactorDescriptor:
        if any(d is descriptor for d in self.factor_descriptors):
            raise GraphError(f"Factor descriptor {descriptor.name} already registered")
        for slot, vertex_desc in enumerate(descriptor.vertex_slots):
            if self.vertex_index(vertex_desc) is None:
                raise GraphError(
                    f"{descriptor.name}: slot {slot} uses vertex descriptor "
                    f"{vertex_desc.name} which is not registered in this graph"
                )
        self.factor_descriptors.append(descriptor)
        return descriptor

    def vertex_index(self, descriptor: VertexDescriptor) -> Optional[int]:
        for idx, registered in enumerate(self.vertex_descriptors):
            if registered is descriptor:
                return idx
        return None

    @property
    def num_vertices(self) -> int:
        return sum(len(d) for d in self.vertex_descriptors)

    @property
    def num_factors(self) -> int:
        return sum(len(d) for d in self.factor_descriptors)

    def __repr__(self) -> str:
        return (f"Graph({len(self.vertex_descriptors)} vertex descriptors / {self.num_vertices} vertices, "
                f"{len(self.factor_descriptors)} factor descriptors / {self.num_factors} factors, "
                f"{self.precision.label})")
