"""Online supervised learning in a two-layer perceptron.

``G(x) = sum_i a_i psi(sum_j b_ij x_j)``; parameters are flattened as
``[a_1..a_M, b_11..b_1N, ..., b_M1..b_MN]``. The learner is
``theta_{n+1} = theta_n + alpha_n (Y_n - G(X_n)) grad_theta G(X_n)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .engine import Trajectory, log_indices, write_columns
from .schedule import StepSchedule

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@njit(cache=True)
def _act(kind, z):
    if kind == 0:
        if z >= 0.0:
            return 1.0 / (1.0 + math.exp(-z))
        e = math.exp(z)
        return e / (1.0 + e)
    return _INV_SQRT_2PI * math.exp(-0.5 * z * z)


@njit(cache=True)
def _dact(kind, z):
    if kind == 0:
        s = _act(0, z)
        return s * (1.0 - s)
    return -z * _INV_SQRT_2PI * math.exp(-0.5 * z * z)


@dataclass(frozen=True)
class Activation:
    kind: str

    def __post_init__(self):
        if self.kind not in ("logistic", "gaussian"):
            raise ValueError(f"unknown activation {self.kind!r}")

    @property
    def code(self) -> int:
        return 0 if self.kind == "logistic" else 1

    @property
    def bound(self) -> float:
        """Bound on ``|psi|`` and ``|psi'|`` over the reals (1 and 3e)."""
        return 1.0 if self.kind == "logistic" else 3.0 * math.e

    def value(self, z):
        z = np.asarray(z, dtype=np.float64)
        if self.kind == "logistic":
            return _logistic(z)
        return _INV_SQRT_2PI * np.exp(-0.5 * z * z)

    def derivative(self, z):
        z = np.asarray(z, dtype=np.float64)
        if self.kind == "logistic":
            s = _logistic(z)
            return s * (1.0 - s)
        return -z * _INV_SQRT_2PI * np.exp(-0.5 * z * z)


def _logistic(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


@dataclass
class PerceptronParams:
    a: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        self.a = np.atleast_1d(np.asarray(self.a, dtype=np.float64))
        self.B = np.atleast_2d(np.asarray(self.B, dtype=np.float64))
        if self.B.shape[0] != self.a.shape[0]:
            raise ValueError("B must have one row per hidden unit")

    @property
    def M(self) -> int:
        return self.a.shape[0]

    @property
    def N(self) -> int:
        return self.B.shape[1]

    @property
    def dim(self) -> int:
        return self.M * (self.N + 1)

    def flat(self) -> np.ndarray:
        return np.concatenate([self.a, self.B.ravel()])

    @classmethod
    def from_flat(cls, theta, M: int, N: int) -> "PerceptronParams":
        theta = np.asarray(theta, dtype=np.float64)
        return cls(theta[:M].copy(), theta[M:].reshape(M, N).copy())

    @classmethod
    def random(cls, M: int, N: int, seed: int = 0, scale: float = 0.5) -> "PerceptronParams":
        rng = np.random.default_rng(seed)
        return cls(rng.uniform(-scale, scale, M), rng.uniform(-scale, scale, (M, N)))

    def permuted(self, perm) -> "PerceptronParams":
        perm = np.asarray(perm)
        return PerceptronParams(self.a[perm], self.B[perm])


def forward(params: PerceptronParams, activation: Activation, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.N,):
        raise ValueError(f"x must have {params.N} entries")
    h = activation.value(params.B @ x)
    # fsum is exactly rounded, so the output is invariant under unit permutations
    return math.fsum(params.a * h)


def forward_batch(params: PerceptronParams, activation: Activation, X) -> np.ndarray:
    return activation.value(np.asarray(X) @ params.B.T) @ params.a


def param_gradient(params: PerceptronParams, activation: Activation, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    z = params.B @ x
    ga = activation.value(z)
    gB = (params.a * activation.derivative(z))[:, None] * x[None, :]
    return np.concatenate([ga, gB.ravel()])


def sl_step(params: PerceptronParams, activation: Activation, sample, alpha: float) -> PerceptronParams:
    x, y = sample
    resid = y - forward(params, activation, x)
    theta = params.flat() + alpha * resid * param_gradient(params, activation, x)
    if not np.all(np.isfinite(theta)):
        raise FloatingPointError("non-finite parameters")
    return PerceptronParams.from_flat(theta, params.M, params.N)


@dataclass
class TrainingSource:
    """Bounded i.i.d. pairs: ``||X|| <= L`` and ``|Y| <= L`` hold for every draw.

    ``X`` is uniform on the cube ``[-L/sqrt(N), L/sqrt(N)]^N``. Targets come from
    a teacher perceptron (plus optional noise) or a constant, clipped to ``[-L, L]``.
    """

    N: int
    L: float = 1.0
    kind: str = "teacher"
    teacher: PerceptronParams | None = None
    activation: Activation = field(default_factory=lambda: Activation("logistic"))
    constant: float = 0.0
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind == "teacher" and self.teacher is None:
            raise ValueError("teacher source needs teacher parameters")
        if self.kind not in ("teacher", "constant"):
            raise ValueError(f"unknown source kind {self.kind!r}")

    def draw(self, n: int, rng: np.random.Generator):
        h = self.L / math.sqrt(self.N)
        X = rng.uniform(-h, h, (n, self.N))
        if self.kind == "teacher":
            Y = forward_batch(self.teacher, self.activation, X)
        else:
            Y = np.full(n, float(self.constant))
        if self.noise_std > 0:
            Y = Y + self.noise_std * rng.standard_normal(n)
        return X, np.clip(Y, -self.L, self.L)

    def streams(self, n_train: int, n_eval: int):
        """Training and frozen evaluation sets from independent child seeds."""
        s_train, s_eval = np.random.SeedSequence(self.seed).spawn(2)
        train = self.draw(n_train, np.random.default_rng(s_train))
        evals = self.draw(n_eval, np.random.default_rng(s_eval))
        return train, evals


@njit(cache=True)
def _train_kernel(kind, a, B, X, Y, alphas, start, loss_acc):
    M, N = B.shape
    z = np.empty(M)
    for t in range(alphas.shape[0]):
        x = X[start + t]
        G = 0.0
        for i in range(M):
            s = 0.0
            for j in range(N):
                s += B[i, j] * x[j]
            z[i] = s
            G += a[i] * _act(kind, s)
        r = Y[start + t] - G
        loss_acc[0] += 0.5 * r * r
        k = alphas[t] * r
        for i in range(M):
            h = _act(kind, z[i])
            c = k * a[i] * _dact(kind, z[i])
            a[i] += k * h
            for j in range(N):
                B[i, j] += c * x[j]
        for i in range(M):
            if not np.isfinite(a[i]):
                return t + 1
            for j in range(N):
                if not np.isfinite(B[i, j]):
                    return t + 1
    return 0


@dataclass
class MlpRun:
    trajectory: Trajectory
    heldout: np.ndarray
    train_loss: np.ndarray
    param_norm: np.ndarray
    final: PerceptronParams

    def to_csv(self, path):
        t = self.trajectory
        cols = {"n": t.n, "gamma": t.gamma, "heldout_loss": self.heldout,
                "train_loss": self.train_loss, "param_norm": self.param_norm}
        for j in range(t.theta.shape[1]):
            cols[f"theta_{j}"] = t.theta[:, j]
        return write_columns(path, cols, f"status={t.status} stop_n={t.stop_n}")


def heldout_loss(params: PerceptronParams, activation: Activation, X, Y) -> float:
    r = Y - forward_batch(params, activation, X)
    return float(0.5 * np.mean(r * r))


def heldout_gradient(params: PerceptronParams, activation: Activation, X, Y) -> np.ndarray:
    Z = X @ params.B.T
    r = Y - activation.value(Z) @ params.a
    ga = -(r[:, None] * activation.value(Z)).mean(axis=0)
    w = -(r[:, None] * activation.derivative(Z) * params.a[None, :])
    gB = (w.T @ X) / X.shape[0]
    return np.concatenate([ga, gB.ravel()])


def train(params0: PerceptronParams, activation: Activation, source: TrainingSource,
          schedule: StepSchedule, max_iters: int, eval_size: int = 10_000,
          log_ratio: float = 1.1, log_every: int = 0, divergence_radius: float = 1e6) -> MlpRun:
    """Run the online learner and log held-out loss on a frozen evaluation set."""
    if source.N != params0.N:
        raise ValueError("source input dimension differs from the network")
    (X, Y), (Xe, Ye) = source.streams(max_iters, eval_size)
    a, B = params0.a.copy(), params0.B.copy()
    idx = log_indices(max_iters, log_ratio, log_every)
    table = schedule.gamma_table(max_iters)
    rows = []
    loss_acc = np.zeros(1)
    n, status, stop = 0, "completed", None
    for target in idx:
        target = int(target)
        if target > n:
            flag = _train_kernel(activation.code, a, B, X, Y, schedule.alphas(n, target), n, loss_acc)
            if flag:
                status, stop = "nan", n + int(flag)
                break
            n = target
        p = PerceptronParams(a.copy(), B.copy())
        theta = p.flat()
        g = heldout_gradient(p, activation, Xe, Ye)
        rows.append((n, table[n], heldout_loss(p, activation, Xe, Ye), float(g @ g), theta,
                     loss_acc[0] / max(n, 1), float(np.linalg.norm(theta))))
        if rows[-1][6] > divergence_radius:
            status, stop = "diverged", n
            break
    ns = np.array([r[0] for r in rows], dtype=np.int64)
    traj = Trajectory(ns, np.array([r[1] for r in rows]), np.array([r[2] for r in rows]),
                      np.array([r[3] for r in rows]), theta=np.array([r[4] for r in rows]),
                      status=status, stop_n=stop,
                      meta={"objective": f"mlp(M={params0.M},N={params0.N},{activation.kind})",
                            "schedule": schedule.describe(), "noise": "iid data"})
    return MlpRun(traj, traj.f.copy(), np.array([r[5] for r in rows]),
                  np.array([r[6] for r in rows]), PerceptronParams(a, B))
