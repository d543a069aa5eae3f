# tests/conftest.py
from typing import List, Sequence

import numpy as np
import pytest

from core.base_traits import ArrayVertexTraits, DifferentiationMode, FactorTraits
from core.precision import PrecisionPair
from modules.graph.descriptors import FactorDescriptor, VertexDescriptor
from modules.graph.graph import Graph
from modules.bench.circle import generate_circle_problem


class AffineFactorTraits(FactorTraits):
    """r_i = Σ a_ij·x_j + c·x_j² − obs_i with per-factor coefficients a in `data`

    Curvature 0 makes the residual affine in the parameters.
    """

    def __init__(self, slot_dims: Sequence[int], residual_dimension: int = 2, curvature: float = 0.1):
        self.slot_dims = list(slot_dims)
        self.residual_dimension = residual_dimension
        self.observation_dimension = residual_dimension
        self.data_dtype = np.dtype(np.float64)
        self.data_shape = (residual_dimension, sum(self.slot_dims))
        self.curvature = curvature

    def error(self, slots, observation, data) -> List:
        out = []
        for i in range(self.residual_dimension):
            acc = -observation[:, i]
            col = 0
            for components in slots:
                for x in components:
                    acc = acc + data[:, i, col] * x + self.curvature * (x * x)
                    col += 1
            out.append(acc)
        return out

    def analytic_jacobian(self, slots, observation, data, slot):
        offset = sum(self.slot_dims[:slot])
        k = self.slot_dims[slot]
        x = slots[slot]
        return data[:, :, offset:offset + k] + 2.0 * self.curvature * x[:, None, :]


def random_spd(rng: np.random.Generator, r: int) -> np.ndarray:
    m = rng.normal(size=(r, r))
    spd = m @ m.T + r * np.eye(r)
    return 0.5 * (spd + spd.T)


def build_random_graph(rng: np.random.Generator, mode=DifferentiationMode.AUTO,
                       precision: PrecisionPair = None, curvature: float = 0.1,
                       fix_first: bool = True) -> Graph:
    """Two vertex types (dims 2 and 3), factor types of arity 1 to 3, SPD information"""
    graph = Graph(precision)
    dtype = graph.precision.graph_dtype
    descriptors = []
    for dim, name in ((2, 'planar'), (3, 'spatial')):
        count = int(rng.integers(3, 8))
        storage = rng.normal(size=(count, dim)).astype(dtype)
        desc = graph.add_vertex_descriptor(VertexDescriptor(ArrayVertexTraits(dim), name=name))
        for i in range(count):
            desc.add_vertex(i, storage[i])
        descriptors.append(desc)

    for arity in (1, 2, 3):
        slot_descs = [descriptors[int(rng.integers(0, 2))] for _ in range(arity)]
        r = int(rng.integers(1, 4))
        traits = AffineFactorTraits([d.dimension for d in slot_descs], r, curvature)
        fdesc = graph.add_factor_descriptor(FactorDescriptor(traits, slot_descs, mode=mode))
        for _ in range(int(rng.integers(3, 7))):
            ids = [int(rng.integers(0, len(d))) for d in slot_descs]
            fdesc.add_factor(ids, rng.normal(size=r), random_spd(rng, r),
                             data=rng.normal(size=traits.data_shape))
    if fix_first:
        descriptors[0].set_fixed(0, True)
    return graph


def assemble_dense(plan, linearization, blocks):
    """Dense J (free columns), block-diagonal weighted information and residual vector"""
    n = plan.total_free_dims
    total = plan.total_residual_dims
    J = np.zeros((total, n))
    W = np.zeros((total, total))
    res = np.zeros(total)
    row = 0
    for d_idx, flin in enumerate(linearization.factors):
        m, r = flin.residuals.shape
        omega = flin.weighted_information
        for i in range(m):
            rows = slice(row, row + r)
            res[rows] = flin.residuals[i]
            W[rows, rows] = omega[i]
            for s, slot in enumerate(plan.slot_plans[d_idx]):
                if slot.free[i]:
                    J[rows, slot.columns[i]] += blocks[d_idx][s][i]
            row += r
    return J, W, res


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def circle_problem():
    return generate_circle_problem(50, 5.0, 0.1, 42)


@pytest.fixture
def tiny_bal_text():
    # 2 cameras, 2 points, 3 observations
    return "\n".join([
        "2 2 3",
        "0 0 -12.5 3.25",
        "1 0 4.0 -2.0",
        "1 1 0.5 0.75",
        "0.01", "-0.02", "0.03", "0.1", "0.2", "-0.3", "500.0", "0.01", "-0.001",
        "-0.01", "0.02", "0.005", "0.5", "-0.1", "0.2", "480.0", "-0.02", "0.002",
        "0.1", "0.2", "-4.0",
        "-0.3", "0.4", "-5.0",
        "",
    ])
