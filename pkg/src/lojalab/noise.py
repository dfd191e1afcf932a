"""Noise processes feeding the stochastic gradient recursion.

Besides i.i.d. zero-mean draws (Gaussian or bounded uniform) there is a
Markov state ``Z`` whose observation ``F(theta, Z)`` is a noisy gradient
estimate, so ``xi_n = F(theta_n, Z_{n+1}) - grad f(theta_n)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numba import njit

from .schedule import StepSchedule, windows


class NoiseError(ValueError):
    pass


def spectral_radius(G: np.ndarray, iters: int = 500, seed: int = 0) -> float:
    """Growth rate of ``G^k x`` by power iteration (geometric mean of norm ratios)."""
    G = np.atleast_2d(np.asarray(G, dtype=np.float64))
    x = np.random.default_rng(seed).standard_normal(G.shape[0])
    x /= np.linalg.norm(x)
    logs = []
    for _ in range(iters):
        y = G @ x
        nrm = np.linalg.norm(y)
        if nrm == 0.0:
            return 0.0
        logs.append(np.log(nrm))
        x = y / nrm
    tail = logs[len(logs) // 2:]
    return float(np.exp(np.mean(tail)))


@dataclass
class MarkovNoiseChain:
    """Controlled Markov chain with a gradient-estimate observation.

    ``transition(theta, z, rng)`` returns ``Z_{n+1}``; ``observation(theta, z)``
    returns ``F(theta, z)``.
    """

    state_dim: int
    transition: Callable
    observation: Callable
    z0: np.ndarray | None = None
    additive: bool = False

    def initial_state(self) -> np.ndarray:
        return np.zeros(self.state_dim) if self.z0 is None else np.array(self.z0, dtype=float)


@njit(cache=True)
def _linear_chain_block(G, H, C, z, v, out):
    n = v.shape[0]
    for i in range(n):
        z = G @ z + H @ v[i]
        out[i] = C @ z
    return z


class LinearMarkovChain(MarkovNoiseChain):
    """``Z_{n+1} = G Z_n + H V_n`` with ``F(theta, Z) = grad f(theta) + C Z``.

    Built with the same shape as the identification state chain: a stable
    linear map driven by i.i.d. Gaussian ``V_n``.
    """

    def __init__(self, G, H, C, z0=None):
        self.G = np.atleast_2d(np.asarray(G, dtype=np.float64))
        self.H = np.atleast_2d(np.asarray(H, dtype=np.float64))
        self.C = np.atleast_2d(np.asarray(C, dtype=np.float64))
        rho = spectral_radius(self.G)
        if rho >= 1.0:
            raise NoiseError(f"transition matrix spectral radius {rho:.4g} >= 1")
        self.rho = rho
        k = self.G.shape[0]
        super().__init__(k, self._transition, self._observation, z0=z0, additive=True)

    @classmethod
    def ar1(cls, dim: int, rho: float, sigma: float) -> "LinearMarkovChain":
        # stationary per-coordinate std equals sigma
        scale = sigma * np.sqrt(1.0 - rho * rho)
        return cls(rho * np.eye(dim), scale * np.eye(dim), np.eye(dim))

    @property
    def driver_dim(self) -> int:
        return self.H.shape[1]

    def _transition(self, theta, z, rng):
        return self.G @ z + self.H @ rng.standard_normal(self.driver_dim)

    def _observation(self, theta, z):
        return self.C @ z

    def perturbation(self, z):
        return self.C @ z


@dataclass
class NoiseSpec:
    """Serializable description of a noise process (config keys ``noise.*``)."""

    kind: str = "none"
    sigma: float = 0.0
    seed: int = 0
    rho: float = 0.5
    half_width: float = 0.0

    def build(self, dim: int) -> "NoiseProcess":
        if self.kind in ("none", "iid_gaussian", "uniform"):
            return NoiseProcess(self.kind, dim, sigma=self.sigma, seed=self.seed,
                                half_width=self.half_width)
        if self.kind == "markov":
            chain = LinearMarkovChain.ar1(dim, self.rho, self.sigma)
            return NoiseProcess("markov", dim, seed=self.seed, chain=chain)
        raise NoiseError(f"unknown noise kind {self.kind!r}")

    def describe(self) -> str:
        if self.kind == "none":
            return "none"
        if self.kind == "uniform":
            return f"uniform(h={self.half_width:g})"
        if self.kind == "markov":
            return f"markov(rho={self.rho:g},sigma={self.sigma:g})"
        return f"{self.kind}(sigma={self.sigma:g})"


@dataclass
class NoiseProcess:
    kind: str
    dim: int
    sigma: float = 0.0
    seed: int = 0
    chain: MarkovNoiseChain | None = None
    half_width: float = 0.0
    rng: np.random.Generator = field(init=False, repr=False)
    z: np.ndarray | None = field(init=False, default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("none", "iid_gaussian", "uniform", "markov"):
            raise NoiseError(f"unknown noise kind {self.kind!r}")
        if self.sigma < 0 or self.half_width < 0:
            raise NoiseError("noise scale must be nonnegative")
        if self.kind == "markov":
            if self.chain is None:
                raise NoiseError("markov noise needs a chain")
            self.z = self.chain.initial_state()
        self.rng = np.random.default_rng(self.seed)

    @property
    def state_independent(self) -> bool:
        """True when ``xi`` does not depend on theta, so blocks can be pre-drawn."""
        if self.kind == "markov":
            return isinstance(self.chain, LinearMarkovChain)
        return True

    def next_noise(self, theta, grad) -> np.ndarray:
        if self.kind == "none":
            return np.zeros(self.dim)
        if self.kind == "iid_gaussian":
            return self.sigma * self.rng.standard_normal(self.dim)
        if self.kind == "uniform":
            return self.rng.uniform(-self.half_width, self.half_width, self.dim)
        self.z = self.chain.transition(theta, self.z, self.rng)
        if self.chain.additive:
            return np.asarray(self.chain.perturbation(self.z), dtype=np.float64)
        return np.asarray(self.chain.observation(theta, self.z), dtype=np.float64) - grad

    def block(self, n: int) -> np.ndarray:
        """Next ``n`` noise vectors; same stream as ``n`` calls of :meth:`next_noise`."""
        if not self.state_independent:
            raise NoiseError("noise depends on theta; draw it step by step")
        if self.kind == "none":
            return np.zeros((n, self.dim))
        if self.kind == "iid_gaussian":
            return self.sigma * self.rng.standard_normal((n, self.dim))
        if self.kind == "uniform":
            return self.rng.uniform(-self.half_width, self.half_width, (n, self.dim))
        ch = self.chain
        v = self.rng.standard_normal((n, ch.driver_dim))
        out = np.empty((n, self.dim))
        self.z = _linear_chain_block(ch.G, ch.H, ch.C, self.z, v, out)
        return out


def next_noise(process: NoiseProcess, theta, grad) -> np.ndarray:
    return process.next_noise(theta, grad)


@dataclass
class NoiseDiagnostic:
    """Finite-horizon window statistics of gamma^r-weighted noise sums.

    ``running_max`` is an empirical proxy only; it is not the limsup itself.
    """

    ns: np.ndarray
    m: np.ndarray
    running_max: np.ndarray
    r: float

    def growth(self) -> float:
        """Relative increase of the running max over the second half of the grid."""
        half = self.ns[-1] // 2
        mid = self.running_max[np.searchsorted(self.ns, half, side="right") - 1]
        return float(self.running_max[-1] / mid - 1.0) if mid > 0 else float("inf")

    def trend_slope(self) -> float:
        """Least-squares slope of ``log m`` against ``log n`` over the second half of the grid.

        Less seed dependent than :meth:`growth`, which a single large early
        window can pin at zero.
        """
        sel = (self.ns >= self.ns[-1] // 2) & (self.m > 0)
        if sel.sum() < 3:
            return float("nan")
        return float(np.polyfit(np.log(self.ns[sel]), np.log(self.m[sel]), 1)[0])


def noise_average_diagnostic(xi, schedule: StepSchedule, r: float, horizon: int | None = None,
                             grid=None, points: int = 200, t: float = 1.0) -> NoiseDiagnostic:
    """For each grid ``n``: ``max_{n <= k < a(n,t)} || sum_{i=n}^k alpha_i gamma_i^r xi_i ||``."""
    xi = np.asarray(xi, dtype=np.float64)
    if xi.ndim == 1:
        xi = xi[:, None]
    horizon = xi.shape[0] if horizon is None else min(horizon, xi.shape[0])
    table = schedule.gamma_table(horizon)
    w = schedule.alphas(0, horizon) * table[:horizon] ** r
    S = np.zeros((horizon + 1, xi.shape[1]))
    np.cumsum(w[:, None] * xi[:horizon], axis=0, out=S[1:])
    if grid is None:
        grid = np.unique(np.geomspace(1, horizon, points).astype(np.int64) - 1)
    ns = np.asarray(grid, dtype=np.int64)
    ends = windows(table, ns, t)
    keep = ends >= 0
    ns, ends = ns[keep], ends[keep]
    if ns.shape[0] == 0:
        raise NoiseError("horizon shorter than one window")
    m = np.empty(ns.shape[0])
    for j, (n, e) in enumerate(zip(ns, ends)):
        stop = max(int(e), int(n) + 1)
        part = S[n + 1: stop + 1] - S[n]
        m[j] = np.sqrt((part * part).sum(axis=1)).max()
    return NoiseDiagnostic(ns, m, np.maximum.accumulate(m), r)
