import numpy as np
import pytest

from gradrobust.quadrature import MAX_POINTS, edge_rule, gauss_1d, tensor_rule


def test_midpoint_rule():
    r = gauss_1d(1)
    np.testing.assert_allclose(r.points, [0.5])
    np.testing.assert_allclose(r.weights, [1.0])


def test_two_point_rule():
    r = gauss_1d(2)
    d = 1 / (2 * np.sqrt(3))
    np.testing.assert_allclose(np.sort(r.points), [0.5 - d, 0.5 + d], atol=1e-15)
    np.testing.assert_allclose(r.weights, [0.5, 0.5], atol=1e-15)


def test_three_point_quintic():
    r = gauss_1d(3)
    assert abs(r.weights @ r.points**5 - 1 / 6) < 1e-15


@pytest.mark.parametrize("n", range(1, MAX_POINTS + 1))
def test_exactness_degree(n):
    r = gauss_1d(n)
    for p in range(2 * n):
        assert r.weights @ r.points**p == pytest.approx(1 / (p + 1), abs=1e-14)
    # one degree higher is generally not exact
    assert abs(r.weights @ r.points ** (2 * n) - 1 / (2 * n + 1)) > 1e-14


@pytest.mark.parametrize("n", [0, MAX_POINTS + 1])
def test_out_of_range(n):
    with pytest.raises(ValueError):
        gauss_1d(n)
    with pytest.raises(ValueError):
        tensor_rule(n)


def test_tensor_rule():
    r = tensor_rule(2)
    assert len(r.points) == 4 and r.weights.sum() == pytest.approx(1.0)
    r = tensor_rule(3)
    x, y = r.points.T
    assert r.weights @ (x**2 * y**4) == pytest.approx(1 / 15, abs=1e-15)


def test_edge_rule_arc_length():
    r = edge_rule(3, (0.2, 0.3), (0.7, 0.3))
    s = r.points[:, 0] - 0.2
    assert r.weights @ s**4 == pytest.approx(0.5**5 / 5, rel=1e-14)
    assert r.weights.sum() == pytest.approx(0.5)
