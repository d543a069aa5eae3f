# tests/test_linear_system.py
import numpy as np
import pytest
import scipy.linalg

from core.precision import precision_from_label
from modules.differentiation.jacobians import evaluate_blocks, materialize_jacobians
from modules.graph import activate, linearize
from modules.linear_system import (HessianOperator, IdentityPreconditioner, PCGConfig,
                                   accumulate_normal_equations, build_preconditioner, clamp_diagonal,
                                   compute_column_scaling, damping_vector, hessian_vector_product,
                                   invert_blocks, pcg_solve)
from modules.bench.circle import generate_circle_problem
from modules.linear_system.normal_equations import accumulate_gradient_and_diagonal, unscale_step
from .conftest import assemble_dense, build_random_graph


def _system(seed, damping=1e-3):
    graph = build_random_graph(np.random.default_rng(seed))
    plan = activate(graph)
    lin = linearize(graph, plan)
    blocks = evaluate_blocks(graph, lin)
    normal = accumulate_normal_equations(graph, plan, lin, blocks)
    scaling = compute_column_scaling(clamp_diagonal(normal.hessian_diagonal))
    store = materialize_jacobians(graph, plan, lin, scaling, blocks)
    damp = damping_vector(damping, scaling)
    J, W, res = assemble_dense(plan, lin, blocks)
    return graph, plan, lin, normal, scaling, store, damp, (J, W, res)


@pytest.mark.parametrize('seed', range(20))
def test_normal_equations_match_dense_assembly(seed):
    _, plan, _, normal, _, _, _, (J, W, res) = _system(seed)
    H = J.T @ W @ J
    g = J.T @ W @ res
    np.testing.assert_allclose(normal.gradient, g, rtol=1e-10, atol=1e-10 * max(1.0, np.abs(g).max()))
    np.testing.assert_allclose(normal.hessian_diagonal, np.diag(H), rtol=1e-10,
                               atol=1e-10 * max(1.0, np.abs(H).max()))
    for v_idx, blocks in enumerate(normal.vertex_blocks):
        for position, columns in enumerate(plan.free_columns[v_idx]):
            np.testing.assert_allclose(blocks[position], H[np.ix_(columns, columns)],
                                       rtol=1e-10, atol=1e-10 * max(1.0, np.abs(H).max()))


@pytest.mark.parametrize('seed', range(200))
def test_hessian_vector_product_matches_dense_assembly(seed):
    _, plan, lin, _, scaling, store, damp, (J, W, _) = _system(seed)
    v = np.random.default_rng(seed + 1000).normal(size=plan.total_free_dims)
    Js = J * scaling[None, :]
    expected = Js.T @ W @ (Js @ v) + damp * v
    actual = hessian_vector_product(plan, store, lin, damp, v)
    assert np.linalg.norm(actual - expected) <= 1e-10 * max(np.linalg.norm(expected), 1e-300)


@pytest.mark.parametrize('seed', range(20))
def test_hessian_product_is_symmetric_and_positive_semidefinite(seed):
    _, plan, lin, _, _, store, damp, _ = _system(seed)
    rng = np.random.default_rng(seed + 2000)
    undamped = np.zeros_like(damp)
    for _ in range(5):
        u, v = rng.normal(size=(2, plan.total_free_dims))
        Hu = hessian_vector_product(plan, store, lin, undamped, u)
        Hv = hessian_vector_product(plan, store, lin, undamped, v)
        scale = max(np.linalg.norm(Hu) * np.linalg.norm(v), 1e-300)
        assert abs(u @ Hv - v @ Hu) <= 1e-10 * scale
        assert v @ Hv >= -1e-12 * max(np.linalg.norm(Hv) * np.linalg.norm(v), 1e-300)


def test_single_circle_factor_by_hand():
    problem = generate_circle_problem(1, radius=1.0, noise_sigma=0.0)
    problem.points[0] = [2.0, 0.0]
    graph = problem.graph
    plan = activate(graph)
    lin = linearize(graph, plan)
    b, diag = accumulate_gradient_and_diagonal(graph, plan, lin, evaluate_blocks(graph, lin))
    np.testing.assert_allclose(b, [12.0, 0.0])
    np.testing.assert_allclose(diag, [16.0, 0.0])


def test_column_scaling_clamps_the_diagonal():
    clamped = clamp_diagonal(np.array([0.0, 1e40, 4.0]))
    np.testing.assert_array_equal(clamped, [1e-6, 1e32, 4.0])
    np.testing.assert_allclose(compute_column_scaling(clamped), [1e3, 1e-16, 0.5])
    np.testing.assert_allclose(unscale_step(np.array([1.0, 2.0, -4.0]), compute_column_scaling(clamped)),
                               [1e3, 2e-16, -2.0])


def test_damping_placement():
    scaling = np.array([2.0, 0.5])
    np.testing.assert_array_equal(damping_vector(0.1, scaling), [0.1, 0.1])
    np.testing.assert_allclose(damping_vector(0.1, scaling, 'unscaled'), [0.4, 0.025])


class TestPCG:

    @pytest.mark.parametrize('seed', range(50))
    def test_matches_direct_solve(self, seed):
        _, plan, lin, normal, scaling, store, _, (J, W, _) = _system(seed)
        damp = damping_vector(1e-2, scaling)
        n = plan.total_free_dims
        Js = J * scaling[None, :]
        A = Js.T @ W @ Js + np.diag(damp)
        b = np.random.default_rng(seed).normal(size=n)

        operator = HessianOperator(plan, store, lin, damp, np.float64)
        precond = build_preconditioner(plan, normal, scaling, damp, np.float64)
        x, stats = pcg_solve(operator, precond, b, PCGConfig(max_iterations=10 * n, tolerance=1e-10))
        direct = scipy.linalg.solve(A, b, assume_a='pos')
        assert np.linalg.norm(A @ x - b) <= 1e-6 * np.linalg.norm(b)
        np.testing.assert_allclose(x, direct, rtol=1e-5, atol=1e-5 * np.abs(direct).max())
        assert stats.converged

    def test_identity_preconditioner_also_converges(self):
        _, plan, lin, _, scaling, store, _, (J, W, _) = _system(5)
        damp = damping_vector(1e-1, scaling)
        b = np.ones(plan.total_free_dims)
        operator = HessianOperator(plan, store, lin, damp, np.float64)
        config = PCGConfig(max_iterations=20 * plan.total_free_dims, tolerance=1e-10,
                           preconditioner='identity')
        x, stats = pcg_solve(operator, IdentityPreconditioner(), b, config)
        Js = J * scaling[None, :]
        A = Js.T @ W @ Js + np.diag(damp)
        assert stats.converged
        assert np.linalg.norm(A @ x - b) <= 1e-6 * np.linalg.norm(b)

    def test_zero_right_hand_side(self):
        x, stats = pcg_solve(lambda v: v, IdentityPreconditioner(), np.zeros(4), PCGConfig())
        assert np.array_equal(x, np.zeros(4))
        assert stats.iterations == 0 and stats.converged

    def test_low_quality_flag(self):
        diagonal = np.logspace(0, 6, 100)
        b = np.ones(100)
        config = PCGConfig(max_iterations=1, tolerance=1e-10, rejection_ratio=10.0)
        _, stats = pcg_solve(lambda v: diagonal * v, IdentityPreconditioner(), b, config)
        assert not stats.converged and stats.low_quality

        config = PCGConfig(max_iterations=1, tolerance=1e-10, rejection_ratio=0.0)
        _, stats = pcg_solve(lambda v: diagonal * v, IdentityPreconditioner(), b, config)
        assert not stats.low_quality

    def test_bfloat16_storage_solves_to_storage_accuracy(self):
        diagonal = np.linspace(1.0, 2.0, 64).astype(np.float32)
        b = np.linspace(-1.0, 1.0, 64).astype(np.float32)
        precision = precision_from_label('fp32-bf16')
        x, _ = pcg_solve(lambda v: diagonal * v, IdentityPreconditioner(), b,
                         PCGConfig(max_iterations=64, tolerance=1e-6), precision)
        assert x.dtype == np.float32
        assert np.all(np.isfinite(x))
        assert np.linalg.norm(diagonal * x - b) <= 0.1 * np.linalg.norm(b)


class TestBlockJacobi:

    def test_singular_block_falls_back_to_diagonal_inverse(self):
        blocks = np.array([[[1.0, 1.0], [1.0, 1.0]],
                           [[2.0, 0.5], [0.5, 1.0]]])
        inverse, fallbacks = invert_blocks(blocks)
        assert fallbacks == 1
        np.testing.assert_allclose(inverse[0], np.eye(2))
        np.testing.assert_allclose(inverse[1], np.linalg.inv(blocks[1]))

    def test_blocks_invert_damped_scaled_vertex_blocks(self):
        _, plan, _, normal, scaling, _, damp, _ = _system(11)
        precond = build_preconditioner(plan, normal, scaling, damp, np.float64)
        assert precond.fallback_count == 0
        columns = plan.free_columns[1][0]
        d = scaling[columns]
        block = d[:, None] * normal.vertex_blocks[1][0] * d[None, :] + np.diag(damp[columns])
        np.testing.assert_allclose(precond.inverse_blocks[1][0], np.linalg.inv(block), rtol=1e-10)
