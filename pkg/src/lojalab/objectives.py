"""Analytic test objectives with known stationary sets and Lojasiewicz exponents.

Builtin objectives are numba-compiled ``value(theta, params)`` /
``gradient(theta, params)`` pairs so the engine can call them from its
compiled inner loop. User objectives may be plain Python callables.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numba import njit


class DegenerateRegionError(ValueError):
    """Every sampled gradient fell below the floor; no exponent can be read off."""


@njit(cache=True)
def _quad_value(theta, p):
    d = theta.shape[0]
    s = 0.0
    for i in range(d):
        row = 0.0
        for j in range(d):
            row += p[i * d + j] * theta[j]
        s += theta[i] * row
    return s


@njit(cache=True)
def _quad_grad(theta, p):
    # p holds A row-major; A symmetric so grad = 2 A theta
    d = theta.shape[0]
    g = np.empty(d)
    for i in range(d):
        row = 0.0
        for j in range(d):
            row += p[i * d + j] * theta[j]
        g[i] = 2.0 * row
    return g


@njit(cache=True)
def _power_value(theta, p):
    s = 0.0
    for i in range(theta.shape[0]):
        s += theta[i] * theta[i]
    return s ** p[0]


@njit(cache=True)
def _power_grad(theta, p):
    k = p[0]
    s = 0.0
    for i in range(theta.shape[0]):
        s += theta[i] * theta[i]
    coef = 2.0 * k * s ** (k - 1.0) if s > 0.0 else 0.0
    return coef * theta


@njit(cache=True)
def _circle_value(theta, p):
    u = theta[0] * theta[0] + theta[1] * theta[1] - 1.0
    return u * u


@njit(cache=True)
def _circle_grad(theta, p):
    u = theta[0] * theta[0] + theta[1] * theta[1] - 1.0
    return 4.0 * u * theta


@njit(cache=True)
def _cross_value(theta, p):
    return theta[0] * theta[0] * theta[1] * theta[1]


@njit(cache=True)
def _cross_grad(theta, p):
    g = np.empty(2)
    g[0] = 2.0 * theta[0] * theta[1] * theta[1]
    g[1] = 2.0 * theta[0] * theta[0] * theta[1]
    return g


@njit(cache=True)
def _negquad_value(theta, p):
    s = 0.0
    for i in range(theta.shape[0]):
        s += theta[i] * theta[i]
    return -s


@njit(cache=True)
def _negquad_grad(theta, p):
    return -2.0 * theta


@dataclass
class ObjectiveOracle:
    """Objective ``f`` with its gradient and, for test problems, known limits.

    ``value_fn``/``grad_fn`` take ``(theta, params)``. When ``jit`` is true they
    are numba dispatchers usable inside compiled loops.
    """

    name: str
    dim: int
    value_fn: Callable
    grad_fn: Callable
    params: np.ndarray = field(default_factory=lambda: np.zeros(1))
    known_mu: float | None = None
    known_fhat: float | None = None
    theta_hat: np.ndarray | None = None
    predicate: Callable[[np.ndarray, float], bool] | None = None
    jit: bool = False

    def __post_init__(self):
        if self.known_mu is not None and not 1.0 < self.known_mu <= 2.0:
            raise ValueError(f"known_mu={self.known_mu} outside (1, 2]")

    def value(self, theta) -> float:
        return float(self.value_fn(np.asarray(theta, dtype=np.float64), self.params))

    def gradient(self, theta) -> np.ndarray:
        return np.asarray(self.grad_fn(np.asarray(theta, dtype=np.float64), self.params),
                          dtype=np.float64)

    def stationary_predicate(self, theta, tol: float = 1e-12) -> bool:
        if self.predicate is None:
            raise NotImplementedError(f"{self.name} has no stationary predicate")
        return bool(self.predicate(np.asarray(theta, dtype=np.float64), tol))

    def project(self, theta) -> np.ndarray:
        """Nearest point of the known stationary set (builtins only)."""
        theta = np.asarray(theta, dtype=np.float64)
        if self.name in ("quadratic", "quartic") or self.name.startswith("power"):
            return np.zeros_like(theta)
        if self.name == "circle":
            nrm = np.linalg.norm(theta)
            return theta / nrm if nrm > 0 else np.array([1.0, 0.0])
        if self.name == "cross":
            out = theta.copy()
            out[int(np.argmin(np.abs(theta)))] = 0.0
            return out
        raise NotImplementedError(f"no projection for {self.name}")


def quadratic(A=None, dim: int = 1) -> ObjectiveOracle:
    """``f = theta^T A theta`` with ``A`` symmetric positive definite."""
    A = np.eye(dim) if A is None else np.atleast_2d(np.asarray(A, dtype=np.float64))
    if A.shape[0] != A.shape[1] or not np.allclose(A, A.T):
        raise ValueError("A must be square and symmetric")
    if np.linalg.eigvalsh(A).min() <= 0:
        raise ValueError("A must be positive definite")
    d = A.shape[0]
    return ObjectiveOracle(
        "quadratic", d, _quad_value, _quad_grad, params=A.ravel().copy(),
        known_mu=2.0, known_fhat=0.0, theta_hat=np.zeros(d),
        predicate=lambda th, tol: bool(np.linalg.norm(th) <= tol), jit=True)


def power_well(k: int, dim: int = 1) -> ObjectiveOracle:
    """``f = ||theta||^(2k)``; exponent ``2k / (2k - 1)`` at the origin."""
    if k < 1:
        raise ValueError("k must be >= 1")
    name = "quartic" if k == 2 else ("quadratic" if k == 1 else f"power{2 * k}")
    return ObjectiveOracle(
        name, dim, _power_value, _power_grad, params=np.array([float(k)]),
        known_mu=2.0 * k / (2.0 * k - 1.0), known_fhat=0.0, theta_hat=np.zeros(dim),
        predicate=lambda th, tol: bool(np.linalg.norm(th) <= tol), jit=True)


def quartic(dim: int = 1) -> ObjectiveOracle:
    return power_well(2, dim)


def circle() -> ObjectiveOracle:
    """``(theta_1^2 + theta_2^2 - 1)^2``: minima fill the unit circle."""
    return ObjectiveOracle(
        "circle", 2, _circle_value, _circle_grad, known_mu=2.0, known_fhat=0.0,
        predicate=lambda th, tol: bool(abs(th @ th - 1.0) <= tol or np.linalg.norm(th) <= tol),
        jit=True)


def cross() -> ObjectiveOracle:
    """``theta_1^2 theta_2^2``: minima fill both coordinate axes.

    The exponent is 2 on the open axes but 4/3 at the origin where they meet.
    """
    return ObjectiveOracle(
        "cross", 2, _cross_value, _cross_grad, known_mu=2.0, known_fhat=0.0,
        predicate=lambda th, tol: bool(min(abs(th[0]), abs(th[1])) <= tol), jit=True)


def negative_quadratic(dim: int = 1) -> ObjectiveOracle:
    """``-||theta||^2``; unbounded below, used to exercise divergence detection."""
    return ObjectiveOracle("negative_quadratic", dim, _negquad_value, _negquad_grad,
                           predicate=lambda th, tol: bool(np.linalg.norm(th) <= tol), jit=True)


_REGISTRY = {
    "quadratic": quadratic,
    "quartic": quartic,
    "circle": lambda dim=2: circle(),
    "cross": lambda dim=2: cross(),
    "negative_quadratic": negative_quadratic,
}


def get_objective(name: str, **kw) -> ObjectiveOracle:
    if name.startswith("power") and name[5:].isdigit():
        return power_well(int(name[5:]) // 2, **kw)
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown objective {name!r}; known: {sorted(_REGISTRY)}") from None
    return factory(**kw)


def builtin_suite() -> list[ObjectiveOracle]:
    return [quadratic(dim=2), quartic(dim=1), circle(), cross()]


def gradient_check(oracle: ObjectiveOracle, theta) -> float:
    """Relative error between the gradient and central finite differences."""
    theta = np.asarray(theta, dtype=np.float64)
    h = 1e-5 * (1.0 + np.linalg.norm(theta))
    fd = np.empty_like(theta)
    for i in range(theta.shape[0]):
        e = np.zeros_like(theta)
        e[i] = h
        fd[i] = (oracle.value(theta + e) - oracle.value(theta - e)) / (2 * h)
    g = oracle.gradient(theta)
    return float(np.linalg.norm(g - fd) / max(np.linalg.norm(g), 1e-8))


def estimate_loj_exponent(oracle: ObjectiveOracle, theta_hat, radius: float,
                          samples: int = 64, seed: int = 0, grad_tol: float = 1e-6,
                          shells: int = 11, floor: float = 1e-14) -> tuple[float, float]:
    """Estimate the Lojasiewicz exponent and constant at a stationary point.

    Points ``theta_hat + radius * 2**-j * u`` are evaluated along a common set of
    random unit directions ``u``. Between consecutive shells the exponent is the
    secant slope of ``log|f - f_hat|`` against ``log||grad f||``, kept only where
    the gradient norm fell by at least ``sqrt(2)``. Each direction contributes
    its innermost such secant and the estimate is the minimum over directions,
    clamped to ``(1, 2]``. The constant
    is the largest ratio ``|f - f_hat| / ||grad f||**mu`` seen.
    """
    theta_hat = np.asarray(theta_hat, dtype=np.float64)
    if not radius > 0:
        raise ValueError("radius must be positive")
    if np.linalg.norm(oracle.gradient(theta_hat)) > grad_tol:
        raise ValueError("theta_hat is not (approximately) stationary")
    fhat = oracle.value(theta_hat)
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((samples, theta_hat.shape[0]))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    radii = radius * 2.0 ** -np.arange(shells)
    logf = np.full((shells, samples), np.nan)
    logg = np.full((shells, samples), np.nan)
    gaps = np.full((shells, samples), np.nan)
    gnorm = np.full((shells, samples), np.nan)
    for j, rho in enumerate(radii):
        for s in range(samples):
            pt = theta_hat + rho * u[s]
            df = abs(oracle.value(pt) - fhat)
            gn = float(np.linalg.norm(oracle.gradient(pt)))
            if df == 0.0 or gn < floor:
                continue
            logf[j, s], logg[j, s] = math.log(df), math.log(gn)
            gaps[j, s], gnorm[j, s] = df, gn
    if np.all(np.isnan(logg)):
        raise DegenerateRegionError("all sampled gradients below floor")
    dlf = logf[:-1] - logf[1:]
    dlg = logg[:-1] - logg[1:]
    # a pair only informs the exponent if the gradient actually shrank between
    # the shells; directions grazing the stationary set break that scaling
    ok = np.isfinite(dlf) & np.isfinite(dlg) & (dlg >= 0.5 * math.log(2.0))
    if not ok.any():
        raise DegenerateRegionError("no usable shell pairs")
    slopes = dlf / np.where(ok, dlg, 1.0)
    # innermost usable pair per direction: curvature bias shrinks with the radius
    per_dir = []
    for s in range(samples):
        rows = np.flatnonzero(ok[:, s])
        if rows.shape[0]:
            per_dir.append(slopes[rows[-1], s])
    mu = float(np.min(per_dir))
    mu = min(max(mu, 1.0 + 1e-12), 2.0)
    valid = np.isfinite(gaps)
    M = float(np.max(gaps[valid] / gnorm[valid] ** mu))
    return mu, M
