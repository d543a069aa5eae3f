# modules/bal/services.py
from dataclasses import dataclass
from typing import Optional

import numpy as np

from core.base_traits import DifferentiationMode
from core.precision import PrecisionPair
from modules.graph.descriptors import FactorDescriptor, VertexDescriptor
from modules.graph.graph import Graph
from modules.graph.loss import huber_loss
from .camera import project
from .factors import CameraTraits, PointTraits, ReprojectionFactorTraits
from .parser import BALProblem
import logging

logger = logging.getLogger(__name__)


@dataclass
class BALGraph:
    """Graph built from a BAL problem plus the arrays its vertices live in

    Vertex handles are row views of `cameras` and `points`, so in-place
    updates by the optimizer land in these arrays.
    """
    problem: BALProblem
    graph: Graph
    cameras: np.ndarray
    points: np.ndarray
    camera_descriptor: VertexDescriptor
    point_descriptor: VertexDescriptor
    factor_descriptor: FactorDescriptor

    @property
    def num_observations(self) -> int:
        return self.problem.num_observations


def build_graph(problem: BALProblem, precision: Optional[PrecisionPair] = None,
                diff_mode: DifferentiationMode = DifferentiationMode.ANALYTIC,
                huber_delta: Optional[float] = None) -> BALGraph:
    """One camera, one point and one reprojection descriptor, all factors at level 0"""
    precision = precision or PrecisionPair()
    dtype = precision.graph_dtype
    graph = Graph(precision)

    cameras = problem.cameras.astype(dtype, copy=True)
    points = problem.points.astype(dtype, copy=True)

    camera_descriptor = graph.add_vertex_descriptor(VertexDescriptor(CameraTraits(), name='cameras'))
    camera_descriptor.reserve(problem.num_cameras)
    for i in range(problem.num_cameras):
        camera_descriptor.add_vertex(i, cameras[i])

    point_descriptor = graph.add_vertex_descriptor(VertexDescriptor(PointTraits(), name='points'))
    point_descriptor.reserve(problem.num_points)
    for i in range(problem.num_points):
        point_descriptor.add_vertex(i, points[i])

    factor_descriptor = graph.add_factor_descriptor(FactorDescriptor(
        ReprojectionFactorTraits(), [camera_descriptor, point_descriptor],
        mode=diff_mode, name='reprojection'))
    factor_descriptor.reserve(problem.num_observations)
    loss = huber_loss(huber_delta) if huber_delta is not None else None
    for cam, point, observation in zip(problem.camera_indices, problem.point_indices,
                                       problem.observations):
        factor_descriptor.add_factor((int(cam), int(point)), observation, loss=loss)

    logger.info(f"🧩 Built BAL graph: {graph!r}, {DifferentiationMode(diff_mode).value} Jacobians")
    return BALGraph(problem, graph, cameras, points, camera_descriptor,
                    point_descriptor, factor_descriptor)


def reprojection_residuals(bal_graph: BALGraph) -> np.ndarray:
    """(n_obs, 2) raw residuals at the current camera and point values"""
    problem = bal_graph.problem
    predicted = project(bal_graph.cameras[problem.camera_indices],
                        bal_graph.points[problem.point_indices])
    return predicted - problem.observations.astype(predicted.dtype)


def mse(bal_graph: BALGraph) -> float:
    """Mean over observations of the squared 2D reprojection error (pixels²), loss-free"""
    n = bal_graph.num_observations
    if n == 0:
        return 0.0
    residuals = reprojection_residuals(bal_graph).astype(np.float64)
    return float(np.sum(residuals * residuals) / n)
