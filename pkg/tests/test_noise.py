from __future__ import annotations

import math

import numpy as np
import pytest

from lojalab.noise import NoiseError, NoiseProcess, NoiseSpec, noise_average_diagnostic, next_noise
from lojalab.schedule import StepSchedule


def test_none_and_zero_sigma_are_zero():
    for spec in (NoiseSpec("none"), NoiseSpec("iid_gaussian", sigma=0.0)):
        p = spec.build(3)
        assert np.all(p.block(100) == 0.0)
        assert np.all(next_noise(p, np.zeros(3), np.zeros(3)) == 0.0)


def test_gaussian_moments():
    n = 100_000
    x = NoiseSpec("iid_gaussian", sigma=1.0, seed=5).build(1).block(n)[:, 0]
    assert abs(x.var() - 1.0) <= 0.02
    assert abs(x.mean()) <= 4.0 / math.sqrt(n)


def test_uniform_bounds_and_mean():
    x = NoiseSpec("uniform", half_width=0.3, seed=2).build(2).block(50_000)
    assert np.all(np.abs(x) <= 0.3)
    assert np.all(np.abs(x.mean(axis=0)) <= 4 * 0.3 / math.sqrt(3 * 50_000))


def test_block_matches_step_by_step_stream():
    for spec in (NoiseSpec("iid_gaussian", sigma=0.7, seed=9), NoiseSpec("uniform", half_width=1, seed=9),
                 NoiseSpec("markov", sigma=0.5, rho=0.8, seed=9)):
        a = spec.build(2)
        b = spec.build(2)
        blk = a.block(50)
        one = np.array([b.next_noise(np.zeros(2), np.zeros(2)) for _ in range(50)])
        assert np.allclose(blk, one, rtol=0, atol=1e-15)


def test_seed_determinism():
    a = NoiseSpec("iid_gaussian", sigma=1.0, seed=11).build(2).block(1000)
    b = NoiseSpec("iid_gaussian", sigma=1.0, seed=11).build(2).block(1000)
    c = NoiseSpec("iid_gaussian", sigma=1.0, seed=12).build(2).block(1000)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_markov_chain_stationary_variance():
    rho, sigma = 0.6, 1.0
    x = NoiseSpec("markov", sigma=sigma, rho=rho, seed=4).build(1).block(200_000)[:, 0]
    lag1 = np.corrcoef(x[:-1], x[1:])[0, 1]
    assert abs(lag1 - rho) <= 0.02


def test_invalid_noise_rejected():
    with pytest.raises(NoiseError):
        NoiseSpec("laplace").build(1)
    with pytest.raises(NoiseError):
        NoiseProcess("iid_gaussian", 1, sigma=-1.0)


def test_diagnostic_zero_noise():
    s = StepSchedule.power_law(0.8)
    d = noise_average_diagnostic(np.zeros((10_000, 2)), s, 1.2)
    assert np.all(d.m == 0.0)


def test_diagnostic_constant_step_brute_force():
    s = StepSchedule.explicit([0.1] * 400)
    xi = np.random.default_rng(0).standard_normal(400)
    r = 1.3
    grid = [0, 17, 100, 250]
    d = noise_average_diagnostic(xi, s, r, grid=grid, t=1.0)
    g = s.gamma_table(400)
    for n, m in zip(d.ns, d.m):
        end = s.window(int(n), 1.0)
        best, acc = 0.0, 0.0
        for k in range(n, max(end, n + 1)):
            acc += 0.1 * g[k] ** r * xi[k]
            best = max(best, abs(acc))
        assert m == pytest.approx(best, rel=1e-12)


def test_admissible_noise_average_does_not_grow():
    s = StepSchedule.power_law(0.8)
    xi = NoiseSpec("iid_gaussian", sigma=1.0, seed=0).build(1).block(1_000_000)
    d = noise_average_diagnostic(xi, s, 1.4)
    assert d.growth() < 0.10


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_inadmissible_exponent_shows_growth(seed):
    # on a shared noise path the statistic's trend rises with r by about 0.2 per unit
    s = StepSchedule.power_law(0.8)
    xi = NoiseSpec("iid_gaussian", sigma=1.0, seed=seed).build(1).block(1_000_000)
    ok = noise_average_diagnostic(xi, s, 1.4)
    bad = noise_average_diagnostic(xi, s, 3.5)
    assert bad.trend_slope() - ok.trend_slope() > 0.3
    assert bad.m[-1] / ok.m[-1] > 100.0
