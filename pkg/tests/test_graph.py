# tests/test_graph.py
import numpy as np
import pytest

from core.base_traits import ArrayVertexTraits, DifferentiationMode, FactorTraits
from core.exceptions import ConfigurationError, GraphError
from modules.bench.circle import CircleFactorTraits, generate_circle_problem
from modules.graph import (FactorDescriptor, Graph, SegmentedReduction, VertexDescriptor,
                           activate, huber_loss, residual, total_error)


class ValueOnlyFactorTraits(FactorTraits):
    residual_dimension = 1
    observation_dimension = 1

    def error(self, slots, observation, data):
        return [slots[0][0] - observation[:, 0]]


def _circle_graph(points):
    graph = Graph()
    vertices = graph.add_vertex_descriptor(VertexDescriptor(ArrayVertexTraits(2)))
    factors = graph.add_factor_descriptor(FactorDescriptor(CircleFactorTraits(), [vertices]))
    storage = np.array(points, dtype=np.float64)
    for i, point in enumerate(storage):
        vertices.add_vertex(i, point)
        factors.add_factor([i], [5.0])
    return graph, vertices, factors, storage


class TestConstruction:

    def test_duplicate_vertex_id_is_rejected(self):
        desc = VertexDescriptor(ArrayVertexTraits(2))
        desc.add_vertex(7, np.zeros(2))
        with pytest.raises(GraphError, match="7"):
            desc.add_vertex(7, np.zeros(2))

    def test_dangling_reference_names_the_slot(self):
        _, _, factors, _ = _circle_graph([[1.0, 2.0]])
        with pytest.raises(GraphError, match="slot 0"):
            factors.add_factor([99], [5.0])

    def test_wrong_arity_is_rejected(self):
        _, _, factors, _ = _circle_graph([[1.0, 2.0]])
        with pytest.raises(GraphError):
            factors.add_factor([0, 0], [5.0])

    def test_reserve_is_only_a_hint(self):
        graph, vertices, factors, _ = _circle_graph([[1.0, 2.0]])
        vertices.reserve(100)
        factors.reserve(100)
        assert vertices.ids == [0]
        assert factors.arrays().slot_rows.shape == (1, 1)
        assert activate(graph).total_free_dims == 2

    def test_unregistered_vertex_descriptor_is_rejected(self):
        graph = Graph()
        stray = VertexDescriptor(ArrayVertexTraits(2))
        with pytest.raises(GraphError, match="not registered"):
            graph.add_factor_descriptor(FactorDescriptor(CircleFactorTraits(), [stray]))

    def test_analytic_mode_requires_a_closed_form(self):
        desc = VertexDescriptor(ArrayVertexTraits(1))
        with pytest.raises(ConfigurationError):
            FactorDescriptor(ValueOnlyFactorTraits(), [desc], mode=DifferentiationMode.ANALYTIC)
        # auto and dynamic only need the residual
        FactorDescriptor(ValueOnlyFactorTraits(), [desc], mode=DifferentiationMode.DYNAMIC)

    def test_indefinite_information_is_rejected(self):
        graph = Graph()
        vertices = graph.add_vertex_descriptor(VertexDescriptor(ArrayVertexTraits(2)))
        vertices.add_vertex(0, np.zeros(2))
        factors = graph.add_factor_descriptor(FactorDescriptor(ValueOnlyFactorTraits(), [vertices]))
        with pytest.raises(GraphError, match="positive semi-definite"):
            factors.add_factor([0], [1.0], information=[[-1.0]])

    def test_bad_factor_index_and_level(self):
        _, _, factors, _ = _circle_graph([[1.0, 2.0]])
        with pytest.raises(GraphError):
            factors.set_level(3, 1)
        with pytest.raises(GraphError):
            factors.set_level(0, 256)
        with pytest.raises(GraphError):
            residual(factors, 5)


class TestActivation:

    def test_offsets_follow_registration_then_insertion_order(self):
        graph = Graph()
        planar = graph.add_vertex_descriptor(VertexDescriptor(ArrayVertexTraits(2)))
        spatial = graph.add_vertex_descriptor(VertexDescriptor(ArrayVertexTraits(3)))
        for i in range(3):
            planar.add_vertex(10 + i, np.zeros(2))
        for i in range(2):
            spatial.add_vertex(i, np.zeros(3))
        planar.set_fixed(11, True)

        plan = activate(graph)
        assert plan.column_offsets[0].tolist() == [0, -1, 2]
        assert plan.column_offsets[1].tolist() == [4, 7]
        assert plan.total_free_dims == 10

    def test_level_masks_higher_factors(self):
        problem = generate_circle_problem(10, level_demo=True)
        assert activate(problem.graph, 0).num_active_factors == 9
        assert activate(problem.graph, 1).num_active_factors == 10
        assert activate(problem.graph, 0).total_residual_dims == 9

    def test_fixed_vertex_columns_are_excluded(self):
        problem = generate_circle_problem(4, fix_last=True)
        plan = activate(problem.graph)
        assert plan.total_free_dims == 6
        slot = plan.slot_plans[0][0]
        assert slot.free.tolist() == [True, True, True, False]
        assert np.all(slot.columns[3] == plan.total_free_dims)


class TestEvaluation:

    def test_total_error_sums_squared_circle_residuals(self, circle_problem):
        pts = circle_problem.points
        expected = np.sum((pts[:, 0] ** 2 + pts[:, 1] ** 2 - 25.0) ** 2)
        assert total_error(circle_problem.graph) == pytest.approx(expected, rel=1e-12)

    def test_single_factor_residual(self):
        _, _, factors, _ = _circle_graph([[3.0, 4.0], [1.0, 0.0]])
        np.testing.assert_allclose(residual(factors, 0), [0.0])
        np.testing.assert_allclose(residual(factors, 1), [-24.0])

    def test_zero_information_contributes_nothing(self):
        graph, vertices, factors, _ = _circle_graph([[3.0, 4.0]])
        vertices.add_vertex(1, np.array([1.0, 0.0]))
        factors.add_factor([1], [5.0], information=[[0.0]])
        assert total_error(graph) == 0.0

    def test_huber_loss_caps_outlier_cost(self):
        graph, _, _, _ = _circle_graph([[1.0, 0.0]])
        plain = total_error(graph)
        graph.factor_descriptors[0].set_loss(0, huber_loss(1.0))
        assert plain == pytest.approx(576.0)
        assert total_error(graph) == pytest.approx(2.0 * 24.0 - 1.0)

    def test_worker_count_leaves_chi2_bit_identical(self):
        problem = generate_circle_problem(5000, seed=7)
        assert total_error(problem.graph, 0, workers=1) == total_error(problem.graph, 0, workers=4)

    def test_empty_graph_has_zero_error(self):
        assert total_error(Graph()) == 0.0


def test_segmented_reduction_matches_scatter_add(rng):
    rows_a = np.array([0, 2, 0, 5])
    rows_b = np.array([2, 1, 5])
    values_a = rng.normal(size=(4, 3))
    values_b = rng.normal(size=(3, 3))
    reduction = SegmentedReduction([(0, 0), (1, 0)], [rows_a, rows_b])
    rows, sums = reduction.reduce([values_a, values_b])

    expected = np.zeros((6, 3))
    np.add.at(expected, rows_a, values_a)
    np.add.at(expected, rows_b, values_b)
    assert rows.tolist() == [0, 1, 2, 5]
    np.testing.assert_allclose(sums, expected[rows], rtol=1e-15)
