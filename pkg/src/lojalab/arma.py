"""Recursive prediction-error identification of scalar ARMA models.

The model polynomials are ``A(z) = 1 - sum a_k z^-k`` and
``B(z) = 1 + sum b_k z^-k`` with ``theta = [a_1..a_M, b_1..b_N]``. The
identifier tracks the prediction error ``eps_n`` together with its parameter
sensitivity ``psi_n`` and updates
``theta_{n+1} = theta_n + alpha_n psi_{n+1} eps_{n+1}``.

By construction ``psi_n`` is the gradient of the one-step predictor
``Y_n - eps_n``, i.e. ``psi_n = -grad_theta eps_n``, which makes the update a
descent step on ``eps^2 / 2``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from .engine import Trajectory, log_indices
from .linalg import monic_roots
from .schedule import StepSchedule


class DomainError(ValueError):
    pass


@dataclass
class ArmaSystem:
    """Signal generator ``X_{n+1} = A X_n + V_n``, ``Y_n = b^T X_n``, ``V_n ~ N(0, noise_cov)``."""

    A: np.ndarray
    b: np.ndarray
    noise_cov: np.ndarray
    seed: int = 0
    innovation_var: float | None = None

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=np.float64))
        self.b = np.atleast_1d(np.asarray(self.b, dtype=np.float64))
        self.noise_cov = np.atleast_2d(np.asarray(self.noise_cov, dtype=np.float64))
        L = self.A.shape[0]
        if self.A.shape != (L, L) or self.b.shape != (L,) or self.noise_cov.shape != (L, L):
            raise ValueError("A must be LxL, b length L, noise_cov LxL")
        rho = self.spectral_radius
        if rho >= 1.0:
            raise DomainError(f"spectral radius of A is {rho:.6g} >= 1")

    @property
    def L(self) -> int:
        return self.A.shape[0]

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.A))))

    @classmethod
    def from_driver(cls, A, b, noise_var: float, g=None, seed: int = 0) -> "ArmaSystem":
        """``V_n = g w_n`` with scalar ``w_n ~ N(0, noise_var)``; ``g`` defaults to ``e_1``."""
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        if g is None:
            g = np.zeros(A.shape[0])
            g[0] = 1.0
        g = np.asarray(g, dtype=np.float64)
        return cls(A, b, noise_var * np.outer(g, g), seed=seed)

    @classmethod
    def arma(cls, ar, ma, noise_var: float = 1.0, seed: int = 0) -> "ArmaSystem":
        """State-space realisation of ``Y_n - sum a_k Y_{n-k} = e_n + sum c_k e_{n-k}``.

        State ``[Y_n..Y_{n-p+1}, e_n..e_{n-q+1}]``; ``e_n`` has variance
        ``noise_var``, which is then the innovation variance.
        """
        ar = np.atleast_1d(np.asarray(ar, dtype=np.float64))
        ma = np.atleast_1d(np.asarray(ma, dtype=np.float64)) if len(np.atleast_1d(ma)) else np.empty(0)
        p, q = max(ar.shape[0], 1), ma.shape[0]
        L = p + q
        A = np.zeros((L, L))
        A[0, : ar.shape[0]] = ar
        A[0, p:] = ma
        for i in range(1, p):
            A[i, i - 1] = 1.0
        for i in range(1, q):
            A[p + i, p + i - 1] = 1.0
        g = np.zeros(L)
        g[0] = 1.0
        if q:
            g[p] = 1.0
        bvec = np.zeros(L)
        bvec[0] = 1.0
        sysm = cls(A, bvec, noise_var * np.outer(g, g), seed=seed)
        # e_n is the innovation only when the MA part is invertible
        if not q or np.max(np.abs(monic_roots(ma))) < 1.0:
            sysm.innovation_var = noise_var
        return sysm

    def driver_factor(self) -> np.ndarray:
        w, U = np.linalg.eigh(self.noise_cov)
        return U * np.sqrt(np.clip(w, 0.0, None))

    def spectral_density(self, omega) -> np.ndarray:
        """``sum_k Cov(Y_0, Y_k) e^{-i omega k}`` from the state-space model."""
        omega = np.atleast_1d(np.asarray(omega, dtype=np.float64))
        L = self.L
        z = np.exp(1j * omega)
        M = z[:, None, None] * np.eye(L)[None] - self.A[None]
        h = np.linalg.solve(np.transpose(M, (0, 2, 1)), np.broadcast_to(self.b, (omega.size, L))[..., None])[..., 0]
        # h = (zI - A)^{-T} b, so phi = h^T Sigma conj(h)
        return np.real(np.einsum("wi,ij,wj->w", h, self.noise_cov, np.conj(h)))


@dataclass
class ModelTheta:
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.a = np.atleast_1d(np.asarray(self.a, dtype=np.float64))
        self.b = np.atleast_1d(np.asarray(self.b, dtype=np.float64))

    @property
    def M(self) -> int:
        return self.a.shape[0]

    @property
    def N(self) -> int:
        return self.b.shape[0]

    def flat(self) -> np.ndarray:
        return np.concatenate([self.a, self.b])

    @classmethod
    def from_flat(cls, theta, M: int) -> "ModelTheta":
        theta = np.asarray(theta, dtype=np.float64)
        return cls(theta[:M], theta[M:])


def d_matrix(M: int, N: int) -> np.ndarray:
    """``N x (M+N)`` selector with ``d_ij = 1`` iff ``j = M + i`` (1-based)."""
    if M < 1 or N < 1:
        raise ValueError("M and N must be >= 1")
    D = np.zeros((N, M + N))
    D[np.arange(N), M + np.arange(N)] = 1.0
    return D


@dataclass
class StabilityResult:
    stable: bool
    margin: float
    roots: np.ndarray

    def __bool__(self):
        return self.stable


def stability_check(theta: ModelTheta | np.ndarray, M: int | None = None) -> StabilityResult:
    """Is the inverse noise filter stable? Roots of ``z^N + b_1 z^(N-1) + ... + b_N``.

    Stable iff every root lies strictly inside the unit circle; the margin is
    ``1 - max |root|``.
    """
    if not isinstance(theta, ModelTheta):
        theta = ModelTheta.from_flat(theta, M)
    if theta.N == 0:
        return StabilityResult(True, 1.0, np.empty(0, dtype=complex))
    if not np.all(np.isfinite(theta.b)):
        return StabilityResult(False, -math.inf, np.empty(0, dtype=complex))
    roots = monic_roots(theta.b)
    margin = 1.0 - float(np.max(np.abs(roots)))
    return StabilityResult(margin > 0.0, margin, roots)


def _poly_on_circle(coef, omega, sign):
    k = np.arange(1, coef.shape[0] + 1)
    return 1.0 + sign * (np.exp(-1j * np.outer(omega, k)) @ coef)


def _mse_on_grid(theta: ModelTheta, system: ArmaSystem, K: int) -> float:
    omega = 2.0 * np.pi * np.arange(K) / K
    A = _poly_on_circle(theta.a, omega, -1.0)
    B = _poly_on_circle(theta.b, omega, 1.0)
    C2 = np.abs(A / B) ** 2
    # periodic trapezoid rule: (1/4pi) * (2pi/K) * sum
    return float(np.sum(C2 * system.spectral_density(omega)) / (2.0 * K))


def asymptotic_mse(theta: ModelTheta, system: ArmaSystem, points: int = 256,
                   rtol: float = 1e-6, max_points: int = 1 << 18, mean: float = 0.0) -> float:
    """Asymptotic mean-square prediction error ``lim E eps_n^2 / 2`` at a frozen theta.

    Integrates ``|A/B|^2`` times the signal spectrum over the unit circle with
    the trapezoid rule, doubling the grid until successive values agree to
    ``rtol``.
    """
    st = stability_check(theta)
    if not st.stable:
        raise DomainError(f"theta outside the stability region (margin {st.margin:.3g})")
    K = int(points)
    prev = _mse_on_grid(theta, system, K)
    while True:
        K *= 2
        cur = _mse_on_grid(theta, system, K)
        if abs(cur - prev) <= rtol * abs(cur) or K >= max_points:
            break
        prev = cur
    if abs(cur - prev) > rtol * abs(cur):
        raise DomainError("quadrature did not converge; theta too close to the boundary")
    c1 = (1.0 - theta.a.sum()) / (1.0 + theta.b.sum())
    return cur + c1 * c1 * mean * mean / 2.0


@njit(cache=True)
def _simulate(A, b, F, x, w, out):
    for i in range(out.shape[0]):
        out[i] = np.dot(b, x)
        x = A @ x + F @ w[i]
    return x


def simulate_signal(system: ArmaSystem, n_steps: int, seed: int | None = None) -> np.ndarray:
    """``Y_0 .. Y_{n-1}`` after a burn-in of ``10 L / (1 - rho(A))`` steps from ``X = 0``."""
    rng = np.random.default_rng(system.seed if seed is None else seed)
    F = np.ascontiguousarray(system.driver_factor())
    rho = system.spectral_radius
    burn = int(math.ceil(10 * system.L / (1.0 - rho)))
    w = rng.standard_normal((burn + n_steps, F.shape[1]))
    out = np.empty(burn + n_steps)
    _simulate(np.ascontiguousarray(system.A), system.b.copy(), F, np.zeros(system.L), w, out)
    return out[burn:]


@dataclass
class RpeState:
    """Identifier state after seeing ``Y_n``.

    ``y = [Y_n..Y_{n-M+1}]``, ``eps = [eps_n..eps_{n-N+1}]``,
    ``psi[i]`` is ``psi_{n-i}``.
    """

    theta: np.ndarray
    y: np.ndarray
    eps: np.ndarray
    psi: np.ndarray
    n: int = 0

    @classmethod
    def initial(cls, theta, M: int, N: int, y_init=None) -> "RpeState":
        theta = np.asarray(theta, dtype=np.float64).copy()
        if theta.shape[0] != M + N:
            raise ValueError("theta must have M+N entries")
        y = np.zeros(M) if y_init is None else np.asarray(y_init, dtype=np.float64).copy()
        return cls(theta, y, np.zeros(N), np.zeros((N, M + N)))

    @property
    def M(self) -> int:
        return self.y.shape[0]

    @property
    def N(self) -> int:
        return self.eps.shape[0]


def rpe_step(state: RpeState, y_next: float, alpha: float) -> RpeState:
    """One identifier pass: prediction error and sensitivity, then the parameter update."""
    M, N = state.M, state.N
    phi = np.concatenate([state.y, state.eps])
    th = state.theta
    eps = y_next - phi @ th
    psi = phi - state.psi.T @ (d_matrix(M, N) @ th)
    if not (np.isfinite(eps) and np.all(np.isfinite(psi))):
        raise FloatingPointError("non-finite prediction error or sensitivity")
    theta = th + alpha * psi * eps
    return RpeState(theta,
                    np.concatenate([[y_next], state.y[:-1]]),
                    np.concatenate([[eps], state.eps[:-1]]),
                    np.vstack([psi[None], state.psi[:-1]]),
                    state.n + 1)


@njit(cache=True)
def _rpe_kernel(Y, start, stop, theta, M, N, ybuf, ebuf, pbuf, alphas, adapt, eps_out, psi_out):
    """Advance over ``Y[start:stop]``; returns 0 on success, else 1 + offending offset."""
    d = M + N
    phi = np.empty(d)
    psi = np.empty(d)
    for t in range(start, stop):
        for j in range(M):
            phi[j] = ybuf[j]
        for j in range(N):
            phi[M + j] = ebuf[j]
        pred = 0.0
        for j in range(d):
            pred += phi[j] * theta[j]
        eps = Y[t] - pred
        for j in range(d):
            acc = phi[j]
            for k in range(N):
                acc -= theta[M + k] * pbuf[k, j]
            psi[j] = acc
        ok = np.isfinite(eps)
        for j in range(d):
            if not np.isfinite(psi[j]):
                ok = False
        if not ok:
            return 1 + t - start
        if adapt:
            a = alphas[t - start] * eps
            for j in range(d):
                theta[j] += a * psi[j]
        for j in range(M - 1, 0, -1):
            ybuf[j] = ybuf[j - 1]
        if M > 0:
            ybuf[0] = Y[t]
        for k in range(N - 1, 0, -1):
            ebuf[k] = ebuf[k - 1]
            for j in range(d):
                pbuf[k, j] = pbuf[k - 1, j]
        if N > 0:
            ebuf[0] = eps
            for j in range(d):
                pbuf[0, j] = psi[j]
        if eps_out.shape[0] > 0:
            eps_out[t - start] = eps
        if psi_out.shape[0] > 0:
            for j in range(d):
                psi_out[t - start, j] = psi[j]
    return 0


def frozen_errors(Y, theta, M: int, N: int, want_psi: bool = True):
    """Prediction errors (and sensitivities) of a frozen model over a signal.

    ``Y[:M]`` fills the initial regressor; returned arrays correspond to
    ``Y[M:]``. ``eps``/``psi`` buffers start at zero.
    """
    Y = np.asarray(Y, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64).copy()
    n = Y.shape[0] - M
    eps = np.empty(n)
    psi = np.empty((n, M + N)) if want_psi else np.empty((0, M + N))
    ybuf = Y[:M][::-1].copy()
    flag = _rpe_kernel(Y, M, Y.shape[0], theta, M, N, ybuf, np.zeros(N), np.zeros((N, M + N)),
                       np.empty(0), False, eps, psi)
    if flag:
        raise FloatingPointError("non-finite frozen recursion")
    return eps, psi


def monte_carlo_mse(theta: ModelTheta, system: ArmaSystem, n_steps: int = 1_000_000,
                    seed: int | None = None, burn: int = 1000) -> float:
    """Long-run average of ``eps^2 / 2`` at a frozen theta on a simulated signal."""
    Y = simulate_signal(system, n_steps + burn + theta.M, seed=seed)
    eps, _ = frozen_errors(Y, theta.flat(), theta.M, theta.N, want_psi=False)
    return float(np.mean(eps[burn:] ** 2) / 2.0)


@dataclass
class IdentResult:
    n: np.ndarray
    gamma: np.ndarray
    theta: np.ndarray
    eps: np.ndarray
    f_theta: np.ndarray
    margin: np.ndarray
    M: int
    N: int
    status: str = "completed"
    stop_n: int | None = None
    guard_policy: str = "halt"
    guard_events: list = field(default_factory=list)

    def final_theta(self) -> np.ndarray:
        return self.theta[-1]

    def to_trajectory(self) -> Trajectory:
        return Trajectory(self.n, self.gamma, self.f_theta, np.full(self.n.shape, np.nan),
                          theta=self.theta, status=self.status, stop_n=self.stop_n)

    def best_so_far(self) -> np.ndarray:
        f = np.where(np.isfinite(self.f_theta), self.f_theta, np.inf)
        return np.minimum.accumulate(f)

    def to_csv(self, path) -> Path:
        path = Path(path)
        names = [f"a_{i + 1}" for i in range(self.M)] + [f"b_{i + 1}" for i in range(self.N)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "gamma", *names, "eps", "f_theta", "margin"])
            for i in range(self.n.shape[0]):
                w.writerow([str(int(self.n[i])), repr(float(self.gamma[i])),
                            *[repr(float(v)) for v in self.theta[i]],
                            repr(float(self.eps[i])), repr(float(self.f_theta[i])),
                            repr(float(self.margin[i]))])
            fh.write(f"# status={self.status} stop_n={self.stop_n} guard={self.guard_policy} "
                     f"guard_events={len(self.guard_events)}\n")
        return path


def _shrink_ma(theta: np.ndarray, M: int, guard: float, factor: float = 0.9):
    th = theta.copy()
    while stability_check(th, M).margin < guard:
        th[M:] *= factor
    return th


def identify(system: ArmaSystem, M: int, N: int, schedule: StepSchedule, theta0,
             max_iters: int, guard: float = 0.01, policy: str = "halt",
             seed: int | None = None, log_ratio: float = 1.1, log_every: int = 0,
             signal=None, log_f: bool = True) -> IdentResult:
    """Run the recursive prediction-error identifier on a simulated signal.

    The stability margin is checked at every logged iteration; below ``guard``
    the run halts (``policy='halt'``) or the MA coefficients are shrunk toward
    zero until the margin is restored (``policy='project'``).
    """
    if policy not in ("halt", "project"):
        raise ValueError("policy must be 'halt' or 'project'")
    if M < 1 or N < 1:
        raise ValueError("M and N must be >= 1")
    theta = np.asarray(theta0, dtype=np.float64).copy()
    if theta.shape[0] != M + N:
        raise ValueError("theta0 must have M+N entries")
    if stability_check(theta, M).margin < guard:
        raise DomainError("theta0 must lie in the stability region with margin >= guard")
    Y = simulate_signal(system, max_iters + M, seed=seed) if signal is None else np.asarray(signal)
    if Y.shape[0] < max_iters + M:
        raise ValueError("signal shorter than max_iters + M")
    idx = log_indices(max_iters, log_ratio, log_every)
    table = schedule.gamma_table(max_iters)
    ybuf = Y[:M][::-1].copy()
    ebuf, pbuf = np.zeros(N), np.zeros((N, M + N))
    rows_n, rows_th, rows_eps, rows_f, rows_m = [], [], [], [], []
    events = []
    status, stop_n, last_eps, n = "completed", None, 0.0, 0
    empty1, empty2 = np.empty(0), np.empty((0, M + N))
    for target in idx:
        if target > n:
            alphas = schedule.alphas(n, int(target))
            flag = _rpe_kernel(Y, M + n, M + int(target), theta, M, N, ybuf, ebuf, pbuf,
                               alphas, True, empty1, empty2)
            if flag:
                status, stop_n = "nan", n + int(flag)
                break
            last_eps = float(ebuf[0])
            n = int(target)
        margin = stability_check(theta, M).margin
        if margin < guard:
            events.append((n, margin))
            if policy == "halt":
                rows_n.append(n); rows_th.append(theta.copy()); rows_eps.append(last_eps)
                rows_f.append(math.nan); rows_m.append(margin)
                status, stop_n = "guard", n
                break
            theta[:] = _shrink_ma(theta, M, guard)
            margin = stability_check(theta, M).margin
        f = math.nan
        if log_f:
            try:
                f = asymptotic_mse(ModelTheta.from_flat(theta, M), system)
            except DomainError:
                pass
        rows_n.append(n); rows_th.append(theta.copy()); rows_eps.append(last_eps)
        rows_f.append(f); rows_m.append(margin)
    ns = np.array(rows_n, dtype=np.int64)
    return IdentResult(ns, table[ns].copy(), np.array(rows_th).reshape(-1, M + N),
                       np.array(rows_eps), np.array(rows_f), np.array(rows_m), M, N,
                       status=status, stop_n=stop_n, guard_policy=policy, guard_events=events)
