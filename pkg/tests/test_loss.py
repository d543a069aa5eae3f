# tests/test_loss.py
import numpy as np
import pytest

from core.exceptions import GraphError
from modules.graph.loss import (LOSS_CODES, LossKind, LossParams, apply_loss_weighting,
                                default_loss, huber_loss, rho, rho_prime)


def test_default_loss_is_identity():
    s = np.array([0.0, 0.5, 4.0])
    codes = np.zeros(3, dtype=np.int8)
    deltas = np.ones(3)
    assert np.array_equal(rho(s, codes, deltas), s)
    assert np.array_equal(rho_prime(s, codes, deltas), np.ones(3))


def test_huber_is_quadratic_inside_and_linear_outside():
    codes = np.full(2, LOSS_CODES[LossKind.HUBER], dtype=np.int8)
    deltas = np.array([1.0, 1.0])
    s = np.array([0.25, 9.0])
    np.testing.assert_allclose(rho(s, codes, deltas), [0.25, 2 * 3.0 - 1.0])
    np.testing.assert_allclose(rho_prime(s, codes, deltas), [1.0, 1.0 / 3.0])


@pytest.mark.parametrize('delta', [0.5, 1.0, 2.0, 10.0])
def test_huber_is_continuous_at_the_threshold(delta):
    s = delta * delta + np.array([-1e-8, 0.0, 1e-8])
    codes = np.full(3, LOSS_CODES[LossKind.HUBER], dtype=np.int8)
    deltas = np.full(3, delta)
    values = rho(s, codes, deltas)
    weights = rho_prime(s, codes, deltas)
    np.testing.assert_allclose(values, delta * delta, rtol=0, atol=2e-8)
    np.testing.assert_allclose(weights, 1.0, rtol=0, atol=1e-7)
    assert values[0] < values[1] < values[2]


def test_huber_weight_beyond_threshold():
    huber = np.array([LOSS_CODES[LossKind.HUBER]], dtype=np.int8)
    assert rho_prime(np.array([4.0]), huber, np.array([1.0]))[0] == 0.5
    assert rho(np.array([4.0]), huber, np.array([1.0]))[0] == 3.0


def test_huber_weight_single_factor():
    residual, weight = apply_loss_weighting(np.array([3.0, 4.0]), np.eye(2), huber_loss(1.0))
    assert weight == pytest.approx(1.0 / 5.0)
    assert np.array_equal(residual, [3.0, 4.0])
    _, weight = apply_loss_weighting(np.array([0.1, 0.0]), np.eye(2), default_loss())
    assert weight == 1.0


def test_non_positive_delta_is_rejected():
    with pytest.raises(GraphError):
        LossParams(LossKind.HUBER, 0.0)
