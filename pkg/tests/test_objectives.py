from __future__ import annotations

import numpy as np
import pytest

from lojalab import objectives as ob


def test_builtin_values_and_gradients():
    q = ob.quadratic(dim=2)
    assert q.value([1.0, 2.0]) == 5.0
    assert np.allclose(q.gradient([1.0, 2.0]), [2.0, 4.0])
    c = ob.circle()
    assert c.value([1.1, 0.0]) == pytest.approx(0.0441)
    assert np.allclose(c.gradient([1.1, 0.0]), [0.924, 0.0])
    x = ob.cross()
    assert x.value([2.0, 3.0]) == 36.0
    assert np.allclose(x.gradient([2.0, 3.0]), [36.0, 24.0])
    assert ob.quartic().value([0.5]) == 0.0625


def test_quadratic_with_matrix():
    A = np.array([[2.0, 0.5], [0.5, 1.0]])
    q = ob.quadratic(A)
    th = np.array([0.3, -0.7])
    assert q.value(th) == pytest.approx(th @ A @ th)
    assert np.allclose(q.gradient(th), 2 * A @ th)
    with pytest.raises(ValueError):
        ob.quadratic(np.array([[1.0, 0.0], [0.0, -1.0]]))


@pytest.mark.parametrize("oracle", ob.builtin_suite(), ids=lambda o: o.name)
def test_gradient_matches_finite_differences(oracle):
    rng = np.random.default_rng(1)
    for _ in range(20):
        th = rng.uniform(-2, 2, oracle.dim)
        assert ob.gradient_check(oracle, th) <= 1e-5


@pytest.mark.parametrize("oracle", ob.builtin_suite(), ids=lambda o: o.name)
def test_stationary_predicate_implies_small_gradient(oracle):
    rng = np.random.default_rng(2)
    hits = 0
    for _ in range(200):
        # points on or very near the stationary set, plus random ones
        th = oracle.project(rng.uniform(-2, 2, oracle.dim)) + rng.normal(scale=1e-14, size=oracle.dim)
        if oracle.stationary_predicate(th, 1e-12):
            hits += 1
            assert np.linalg.norm(oracle.gradient(th)) <= 1e-10
    assert hits > 0


@pytest.mark.parametrize("name,theta_hat,expected", [
    ("quadratic", [0.0], 2.0),
    ("quartic", [0.0], 4.0 / 3.0),
    ("power6", [0.0], 1.2),
    ("circle", [1.0, 0.0], 2.0),
    ("cross", [0.0, 0.0], 4.0 / 3.0),
    ("cross", [1.0, 0.0], 2.0),
])
def test_loj_exponent_recovery(name, theta_hat, expected):
    oracle = ob.get_objective(name, dim=len(theta_hat))
    mu, M = ob.estimate_loj_exponent(oracle, theta_hat, 0.1)
    assert abs(mu - expected) <= 0.1
    assert 1.0 < mu <= 2.0 and M > 0


def test_loj_estimate_is_clamped_and_checks_stationarity():
    with pytest.raises(ValueError):
        ob.estimate_loj_exponent(ob.quadratic(), [1.0], 0.1)
    with pytest.raises(ValueError):
        ob.estimate_loj_exponent(ob.quadratic(), [0.0], 0.0)


def test_degenerate_region_raises():
    flat = ob.ObjectiveOracle("flat", 1, lambda th, p: 0.0, lambda th, p: np.zeros(1))
    with pytest.raises(ob.DegenerateRegionError):
        ob.estimate_loj_exponent(flat, [0.0], 0.1)


def test_known_constants_and_registry():
    assert ob.quartic().known_mu == pytest.approx(4 / 3)
    assert ob.get_objective("power6").known_mu == pytest.approx(1.2)
    with pytest.raises(KeyError):
        ob.get_objective("banana")
    with pytest.raises(ValueError):
        ob.ObjectiveOracle("bad", 1, None, None, known_mu=2.5)


def test_projection_onto_stationary_sets():
    assert np.allclose(ob.circle().project([3.0, 4.0]), [0.6, 0.8])
    assert np.allclose(ob.cross().project([0.2, -3.0]), [0.0, -3.0])
