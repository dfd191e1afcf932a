"""Property checks that the suite driver runs alongside the rate experiments.

Each check returns a :class:`Check`; configs of kind ``diagnostics`` list the
checks to run and their parameters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import arma, mlp, objectives, rates
from .schedule import StepSchedule, validate_schedule


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"check {self.name}: {'PASS' if self.passed else 'FAIL'}  {self.detail}".rstrip()


def rate_constant_examples() -> Check:
    cases = [((2.0, 1.2), (math.inf, 2.4, 0.2)),
             ((4.0 / 3.0, 2.0), (1.5, 2.0, 0.5)),
             ((4.0 / 3.0, 1.2), (1.5, 1.6, 0.2))]
    bad = []
    for (mu, r), (rh, ph, qh) in cases:
        c = rates.rate_constants(mu, r)
        if not (math.isclose(c.r_hat, rh, rel_tol=1e-12) or c.r_hat == rh) \
                or not math.isclose(c.p_hat, ph, rel_tol=1e-12) \
                or not math.isclose(c.q_hat, qh, rel_tol=1e-12, abs_tol=1e-15):
            bad.append((mu, r))
    return Check("rate_constants_examples", not bad, f"{len(cases) - len(bad)}/{len(cases)} match")


def rate_constant_monotonicity(size: int = 20) -> Check:
    mus = np.linspace(1.0, 2.0, size + 1)[1:]
    rs = np.linspace(1.05, 4.0, size)
    violations = 0
    for mu in mus:
        prev = None
        for r in rs:
            c = rates.rate_constants(float(mu), float(r))
            if prev is not None and (c.p_hat < prev.p_hat or c.q_hat < prev.q_hat):
                violations += 1
            prev = c
    return Check("rate_constants_monotone", violations == 0,
                 f"{violations} violations on a {size}x{size} grid")


def schedule_interval(a: float, expected: tuple[float, float]) -> Check:
    rep = validate_schedule(StepSchedule.power_law(a), horizon=10_000)
    ok = rep.r_interval is not None and tuple(rep.r_interval) == tuple(expected)
    return Check("schedule_r_interval", ok, f"a={a:g} -> {rep.r_interval}, expected {tuple(expected)}")


def window_pairs(a: float = 0.8, c: float = 1.0, pairs: int = 10_000, n_max: int = 100_000,
                 t_max: float = 5.0, seed: int = 0) -> Check:
    sched = StepSchedule.power_law(a, c)
    rng = np.random.default_rng(seed)
    ns = rng.integers(0, n_max, pairs)
    ts = rng.uniform(0.0, t_max, pairs)
    violations = 0
    for n, t in zip(ns, ts):
        k = sched.window(int(n), float(t))
        table = sched.gamma_table(k + 2)
        g0 = table[n]
        if not (table[k] - g0 <= t < table[k + 1] - g0):
            violations += 1
    return Check("window_inequality", violations == 0, f"{violations} violations in {pairs} pairs")


def loj_recovery(objective: str, theta_hat, expected: float, tol: float,
                 radius: float = 0.1) -> Check:
    oracle = objectives.get_objective(objective, dim=len(theta_hat))
    mu, _ = objectives.estimate_loj_exponent(oracle, theta_hat, radius)
    return Check(f"loj_{objective}", abs(mu - expected) <= tol,
                 f"mu={mu:.4f} expected {expected:.4f} +/- {tol:g}")


def arma_psi_fd(ar, ma, M: int, N: int, pairs: int = 100, tol: float = 1e-5, length: int = 400,
                seed: int = 0) -> Check:
    """Frozen-theta sensitivity against central differences of the prediction error.

    The recursion's ``psi`` is the gradient of the predictor, so it is compared
    with ``-d eps / d theta``.
    """
    system = arma.ArmaSystem.arma(ar, ma, 1.0, seed=seed)
    rng = np.random.default_rng(seed)
    Y = arma.simulate_signal(system, length + M, seed=seed)
    worst = 0.0
    for _ in range(pairs):
        while True:
            th = np.concatenate([rng.uniform(-0.8, 0.8, M), rng.uniform(-0.6, 0.6, N)])
            if arma.stability_check(th, M).margin > 0.2:
                break
        k = int(rng.integers(5, length))
        _, psi = arma.frozen_errors(Y[: M + k + 1], th, M, N)
        h = 1e-6
        fd = np.empty(M + N)
        for j in range(M + N):
            e = np.zeros(M + N)
            e[j] = h
            ep, _ = arma.frozen_errors(Y[: M + k + 1], th + e, M, N, want_psi=False)
            em, _ = arma.frozen_errors(Y[: M + k + 1], th - e, M, N, want_psi=False)
            fd[j] = (ep[k] - em[k]) / (2 * h)
        err = np.linalg.norm(psi[k] + fd) / max(np.linalg.norm(fd), 1e-12)
        worst = max(worst, float(err))
    return Check("arma_psi_fd", worst <= tol, f"worst relative error {worst:.2e} over {pairs} pairs")


def arma_orthogonality(ar, ma, samples: int = 100_000, seed: int = 0, z: float = 4.0) -> Check:
    system = arma.ArmaSystem.arma(ar, ma, 1.0, seed=seed)
    M, N = len(ar), len(ma)
    theta = np.concatenate([ar, ma])
    burn = 1000
    Y = arma.simulate_signal(system, samples + burn + M, seed=seed)
    eps, psi = arma.frozen_errors(Y, theta, M, N)
    prod = psi[burn:] * eps[burn:, None]
    mean = prod.mean(axis=0)
    se = prod.std(axis=0, ddof=1) / math.sqrt(prod.shape[0])
    scores = np.abs(mean) / se
    return Check("arma_orthogonality", bool(np.all(scores <= z)),
                 "|mean|/SE = " + ", ".join(f"{s:.2f}" for s in scores))


def arma_spectral_vs_mc(ar, ma, thetas, n_steps: int = 1_000_000, rtol: float = 0.02,
                        seed: int = 0) -> Check:
    system = arma.ArmaSystem.arma(ar, ma, 1.0, seed=seed)
    M, N = len(ar), len(ma)
    worst = 0.0
    for i, th in enumerate(thetas):
        mt = arma.ModelTheta.from_flat(th, M)
        spec = arma.asymptotic_mse(mt, system)
        mc = arma.monte_carlo_mse(mt, system, n_steps=n_steps, seed=seed + i)
        worst = max(worst, abs(spec - mc) / spec)
    return Check("arma_spectral_vs_mc", worst <= rtol,
                 f"worst relative gap {worst:.4f} over {len(thetas)} thetas")


def arma_white_noise(noise_var: float = 1.0, tol: float = 1e-9) -> Check:
    system = arma.ArmaSystem.arma([0.0], [], noise_var)
    f = arma.asymptotic_mse(arma.ModelTheta(np.zeros(1), np.zeros(1)), system)
    return Check("arma_white_noise", abs(f - noise_var / 2) <= tol,
                 f"f={float(f)!r} expected {noise_var / 2!r}")


def mlp_gradient(M: int = 3, N: int = 2, points: int = 20, tol: float = 1e-6,
                 seed: int = 0) -> Check:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for kind in ("logistic", "gaussian"):
        act = mlp.Activation(kind)
        for _ in range(points):
            p = mlp.PerceptronParams(rng.uniform(-1, 1, M), rng.uniform(-1, 1, (M, N)))
            x = rng.uniform(-1, 1, N)
            worst = max(worst, mlp_fd_error(p, act, x))
    return Check("mlp_gradient_fd", worst <= tol, f"worst relative error {worst:.2e}")


def mlp_fd_error(params, act, x, h: float = 1e-6) -> float:
    theta = params.flat()
    g = mlp.param_gradient(params, act, x)
    fd = np.empty_like(theta)
    for j in range(theta.shape[0]):
        e = np.zeros_like(theta)
        e[j] = h
        up = mlp.forward(mlp.PerceptronParams.from_flat(theta + e, params.M, params.N), act, x)
        dn = mlp.forward(mlp.PerceptronParams.from_flat(theta - e, params.M, params.N), act, x)
        fd[j] = (up - dn) / (2 * h)
    return float(np.linalg.norm(g - fd) / max(np.linalg.norm(g), 1e-12))


def mlp_permutation(M: int = 4, N: int = 3, trials: int = 200, seed: int = 0) -> Check:
    rng = np.random.default_rng(seed)
    mismatches = 0
    for i in range(trials):
        act = mlp.Activation("logistic" if i % 2 == 0 else "gaussian")
        p = mlp.PerceptronParams(rng.normal(size=M), rng.normal(size=(M, N)))
        x = rng.normal(size=N)
        if mlp.forward(p, act, x) != mlp.forward(p.permuted(rng.permutation(M)), act, x):
            mismatches += 1
    return Check("mlp_permutation", mismatches == 0, f"{mismatches} mismatches in {trials} trials")


REGISTRY = {
    "rate_constants_examples": rate_constant_examples,
    "rate_constants_monotone": rate_constant_monotonicity,
    "schedule_r_interval": schedule_interval,
    "window_inequality": window_pairs,
    "loj": loj_recovery,
    "arma_psi_fd": arma_psi_fd,
    "arma_orthogonality": arma_orthogonality,
    "arma_spectral_vs_mc": arma_spectral_vs_mc,
    "arma_white_noise": arma_white_noise,
    "mlp_gradient_fd": mlp_gradient,
    "mlp_permutation": mlp_permutation,
}


def run_check(spec: dict) -> Check:
    spec = dict(spec)
    kind = spec.pop("type")
    return REGISTRY[kind](**spec)
