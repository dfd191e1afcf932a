from __future__ import annotations

import math

import numpy as np
import pytest

from lojalab import arma
from lojalab.arma import ArmaSystem, ModelTheta, RpeState
from lojalab.checks import arma_orthogonality, arma_psi_fd
from lojalab.schedule import StepSchedule


def test_d_matrix_examples():
    assert np.array_equal(arma.d_matrix(2, 2), [[0, 0, 1, 0], [0, 0, 0, 1]])
    assert np.array_equal(arma.d_matrix(1, 1), [[0, 1]])
    D = arma.d_matrix(3, 4)
    assert np.count_nonzero(D) == 4 and set(D[D != 0]) == {1.0}


def test_rpe_step_zero_parameters():
    st = RpeState.initial(np.zeros(2), 1, 1, y_init=[0.7])
    st.eps[:] = 0.2
    nxt = arma.rpe_step(st, 1.5, 0.1)
    phi = np.array([0.7, 0.2])
    assert nxt.eps[0] == 1.5
    assert np.allclose(nxt.psi[0], phi)
    assert np.allclose(nxt.theta, 0.1 * phi * 1.5)
    assert nxt.y[0] == 1.5 and nxt.n == 1


def test_rpe_step_sensitivity_recursion():
    a, b = 0.4, 0.3
    st = RpeState.initial([a, b], 1, 1, y_init=[1.0])
    st.eps[:] = 0.5
    st.psi[0] = [0.2, -0.1]
    nxt = arma.rpe_step(st, 2.0, 0.0)
    assert np.allclose(nxt.psi[0], np.array([1.0, 0.5]) - b * np.array([0.2, -0.1]))
    assert np.array_equal(nxt.theta, [a, b])


def test_rpe_step_nan():
    st = RpeState.initial(np.zeros(2), 1, 1)
    with pytest.raises(FloatingPointError):
        arma.rpe_step(st, float("nan"), 0.1)


def test_kernel_matches_reference_step():
    system = ArmaSystem.arma([0.5], [0.3], seed=2)
    Y = arma.simulate_signal(system, 501)
    M = N = 2
    sched = StepSchedule.power_law(0.8, 0.05)
    st = RpeState.initial(np.zeros(M + N), M, N, y_init=Y[:M][::-1])
    for i, y in enumerate(Y[M:]):
        st = arma.rpe_step(st, y, sched.alpha(i))
    res = arma.identify(system, M, N, sched, np.zeros(M + N), 501 - M, signal=Y, log_f=False)
    assert np.allclose(res.final_theta(), st.theta, rtol=1e-12, atol=1e-14)


def test_psi_is_gradient_of_predictor():
    chk = arma_psi_fd([0.5], [0.3], 1, 1, pairs=100, tol=1e-5)
    assert chk.passed, chk.detail
    chk2 = arma_psi_fd([0.5, -0.2], [0.3, 0.1], 2, 2, pairs=20, tol=1e-5, seed=3)
    assert chk2.passed, chk2.detail


def test_orthogonality_at_truth():
    chk = arma_orthogonality([0.5], [0.3], samples=100_000)
    assert chk.passed, chk.detail


def test_stability_examples():
    s = arma.stability_check(ModelTheta([0.0], [0.5]))
    assert s.stable and s.margin == pytest.approx(0.5)
    assert not arma.stability_check(ModelTheta([0.0], [1.5]))
    s2 = arma.stability_check(ModelTheta([0.0], [1.0, 0.25]))
    assert s2.stable and s2.margin == pytest.approx(0.5, abs=1e-7)


def test_stability_agrees_with_numpy_oracle():
    rng = np.random.default_rng(0)
    disagreements = 0
    for _ in range(1000):
        N = int(rng.integers(1, 9))
        b = rng.uniform(-1.5, 1.5, N) / N
        ref = np.max(np.abs(np.roots(np.concatenate([[1.0], b])))) < 1.0
        got = arma.stability_check(ModelTheta([0.0], b)).stable
        disagreements += int(ref != got)
    assert disagreements == 0


def test_white_noise_mse_exact():
    system = ArmaSystem.arma([0.0], [], 2.0)
    f = arma.asymptotic_mse(ModelTheta([0.0], [0.0]), system)
    assert abs(f - 1.0) <= 1e-9


def test_matched_model_mse_is_half_innovation():
    system = ArmaSystem.arma([0.5], [0.3], 1.0)
    f = arma.asymptotic_mse(ModelTheta([0.5], [0.3]), system)
    assert f == pytest.approx(0.5, abs=1e-9)
    mc = arma.monte_carlo_mse(ModelTheta([0.5], [0.3]), system, n_steps=1_000_000, seed=1)
    assert abs(mc - f) / f <= 0.02


def test_mse_lower_bound_over_theta():
    system = ArmaSystem.arma([0.5], [0.3], 1.0)
    rng = np.random.default_rng(4)
    for _ in range(100):
        th = ModelTheta(rng.uniform(-0.9, 0.9, 1), rng.uniform(-0.9, 0.9, 1))
        assert arma.asymptotic_mse(th, system) >= 0.5 - 1e-9


@pytest.mark.parametrize("theta", [([0.0], [0.0]), ([0.2], [-0.4]), ([0.8], [0.6])])
def test_spectral_vs_monte_carlo(theta):
    system = ArmaSystem.arma([0.5], [0.3], 1.0)
    mt = ModelTheta(*theta)
    spec = arma.asymptotic_mse(mt, system)
    mc = arma.monte_carlo_mse(mt, system, n_steps=1_000_000, seed=7)
    assert abs(spec - mc) / spec <= 0.02


def test_mse_rejects_unstable_theta():
    with pytest.raises(arma.DomainError):
        arma.asymptotic_mse(ModelTheta([0.0], [1.2]), ArmaSystem.arma([0.5], [0.3]))


def test_simulate_white_noise_variance():
    y = arma.simulate_signal(ArmaSystem([[0.0]], [1.0], [[1.0]]), 100_000, seed=0)
    assert abs(y.var() - 1.0) <= 0.03


def test_simulate_ar1_autocorrelation():
    y = arma.simulate_signal(ArmaSystem([[0.5]], [1.0], [[1.0]]), 100_000, seed=0)
    assert abs(np.corrcoef(y[:-1], y[1:])[0, 1] - 0.5) <= 0.02


def test_simulate_zero_noise():
    assert np.all(arma.simulate_signal(ArmaSystem([[0.5]], [1.0], [[0.0]]), 1000) == 0.0)


def test_unstable_generator_rejected():
    with pytest.raises(arma.DomainError):
        ArmaSystem([[1.2]], [1.0], [[1.0]])


def test_identify_recovers_truth():
    system = ArmaSystem.arma([0.5], [0.3], 1.0)
    res = arma.identify(system, 1, 1, StepSchedule.power_law(0.8, 0.1), [0.0, 0.0], 1_000_000, seed=0)
    assert res.status == "completed"
    assert np.linalg.norm(res.final_theta() - [0.5, 0.3]) <= 0.1
    assert res.f_theta[-1] <= 0.5 * 1.05
    env = res.best_so_far()
    assert np.all(np.diff(env) <= 0)


def test_guard_halt_and_project():
    system = ArmaSystem.arma([0.5], [0.3], 1.0)
    sched = StepSchedule.explicit([2.0] * 2000)
    halt = arma.identify(system, 1, 1, sched, [0.0, 0.95], 2000, guard=0.02, seed=1, log_every=1)
    assert halt.status == "guard" and halt.guard_events
    assert np.all(np.isfinite(halt.theta))
    proj = arma.identify(system, 1, 1, StepSchedule.power_law(0.8, 0.5), [0.0, 0.95], 2000,
                         guard=0.02, policy="project", seed=1, log_every=1)
    assert proj.guard_policy == "project"
    assert np.all(proj.margin[np.isfinite(proj.margin)] >= 0.02)


def test_ident_csv(tmp_path):
    system = ArmaSystem.arma([0.5], [0.3], 1.0)
    res = arma.identify(system, 1, 1, StepSchedule.power_law(0.8, 0.1), [0.0, 0.0], 1000)
    path = res.to_csv(tmp_path / "id.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "n,gamma,a_1,b_1,eps,f_theta,margin"
    assert lines[-1].startswith("# status=completed")
    assert len(res.to_trajectory()) == len(res.n)
