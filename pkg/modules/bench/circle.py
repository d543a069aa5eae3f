# modules/bench/circle.py
"""Toy problem: pull noisy 2D points onto a circle of known radius"""
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from config.settings import SOLVER_DEFAULTS
from core.base_traits import ArrayVertexTraits, DifferentiationMode, FactorTraits
from core.exceptions import ConfigurationError
from core.precision import PrecisionPair
from modules.graph.descriptors import FactorDescriptor, VertexDescriptor
from modules.graph.graph import Graph
import logging

logger = logging.getLogger(__name__)

_CIRCLE_DEFAULTS = SOLVER_DEFAULTS['circle']

# Level given to the leveled-out factor when level_demo is set
DEMO_LEVEL = 1


class Point2DTraits(ArrayVertexTraits):
    def __init__(self):
        super().__init__(2)


class CircleFactorTraits(FactorTraits):
    """x² + y² − r², one factor per point; the radius is the observation"""

    residual_dimension = 1
    observation_dimension = 1

    def error(self, slots: Sequence[Sequence], observation: np.ndarray, data: np.ndarray) -> List:
        x, y = slots[0]
        radius = observation[:, 0]
        return [x * x + y * y - radius * radius]

    def analytic_jacobian(self, slots: Sequence[np.ndarray], observation: np.ndarray,
                          data: np.ndarray, slot: int) -> np.ndarray:
        points = slots[0]
        return (2.0 * points)[:, None, :]


@dataclass
class CircleProblem:
    graph: Graph
    points: np.ndarray                # (n, 2), vertex handles are row views
    vertex_descriptor: VertexDescriptor
    factor_descriptor: FactorDescriptor
    radius: float

    @property
    def num_points(self) -> int:
        return int(self.points.shape[0])


def sample_circle_points(n: int, radius: float, noise_sigma: float, seed: int) -> np.ndarray:
    """n points on the circle with isotropic Gaussian noise, binary64"""
    rng = np.random.default_rng(seed)
    angles = rng.uniform(0.0, 2.0 * np.pi, size=n)
    points = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    if noise_sigma > 0:
        points = points + rng.normal(0.0, noise_sigma, size=(n, 2))
    return points


def generate_circle_problem(n: int = _CIRCLE_DEFAULTS['num_points'],
                            radius: float = _CIRCLE_DEFAULTS['radius'],
                            noise_sigma: float = _CIRCLE_DEFAULTS['noise_sigma'],
                            seed: int = _CIRCLE_DEFAULTS['seed'],
                            precision: Optional[PrecisionPair] = None,
                            diff_mode: DifferentiationMode = DifferentiationMode.AUTO,
                            fix_last: bool = False,
                            level_demo: bool = False) -> CircleProblem:
    """Build the circle graph; identical arguments give bit-identical graphs

    `fix_last` fixes the last point and `level_demo` moves the first factor
    to a higher level, so it is inert when optimizing at level 0.
    """
    if n < 1:
        raise ConfigurationError(f"Circle problem needs at least one point, got {n}")
    precision = precision or PrecisionPair()
    points = sample_circle_points(n, radius, noise_sigma, seed).astype(precision.graph_dtype)

    graph = Graph(precision)
    vertices = graph.add_vertex_descriptor(VertexDescriptor(Point2DTraits(), name='points'))
    factors = graph.add_factor_descriptor(
        FactorDescriptor(CircleFactorTraits(), [vertices], mode=diff_mode, name='circle'))
    vertices.reserve(n)
    factors.reserve(n)
    for i in range(n):
        vertices.add_vertex(i, points[i])
        factors.add_factor([i], [radius])

    if fix_last:
        vertices.set_fixed(n - 1, True)
    if level_demo:
        factors.set_level(0, DEMO_LEVEL)
    logger.debug(f"Generated circle problem: {graph!r}")
    return CircleProblem(graph, points, vertices, factors, float(radius))
