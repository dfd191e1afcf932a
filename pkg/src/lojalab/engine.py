"""The stochastic gradient recursion ``theta_{n+1} = theta_n - alpha_n (grad f(theta_n) + xi_n)``.

Runs are logged at geometrically spaced iterations. Builtin objectives with
theta-independent noise go through a numba loop over pre-drawn noise blocks;
anything else (Python objectives, theta-controlled Markov chains) takes the
step-by-step path. Both paths share the step blocks and the noise stream,
so they produce the same trajectory.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from .noise import NoiseProcess, NoiseSpec
from .objectives import ObjectiveOracle, get_objective
from .schedule import GammaClock, StepSchedule

COMPLETED, DIVERGED, NAN = "completed", "diverged", "nan"
_STATUS = {0: COMPLETED, 1: DIVERGED, 2: NAN}
_CHUNK = 1 << 16


class ConfigError(ValueError):
    """Invalid run configuration; ``path`` names the offending field."""

    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


def sgd_step(theta, alpha: float, grad, xi) -> np.ndarray:
    return theta - alpha * (grad + xi)


def log_indices(max_iters: int, ratio: float = 1.1, every: int = 0) -> np.ndarray:
    """Iterations to record: both endpoints plus a geometric ladder (and an optional stride)."""
    pts = {0, max_iters}
    if ratio and ratio > 1.0:
        x = 1.0
        while x < max_iters:
            pts.add(int(round(x)))
            x *= ratio
    if every and every > 0:
        pts.update(range(0, max_iters + 1, every))
    return np.array(sorted(p for p in pts if 0 <= p <= max_iters), dtype=np.int64)


@dataclass
class RunConfig:
    oracle: ObjectiveOracle | str
    schedule: StepSchedule
    theta0: np.ndarray
    max_iters: int
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    log_ratio: float = 1.1
    log_every: int = 0
    divergence_radius: float = 1e6
    record_theta: bool = True
    record_noise: bool = False
    force_python: bool = False

    def resolve(self) -> ObjectiveOracle:
        if isinstance(self.oracle, str):
            dim = int(np.asarray(self.theta0).shape[0])
            try:
                return get_objective(self.oracle, dim=dim)
            except KeyError as exc:
                raise ConfigError("objective", str(exc)) from None
        return self.oracle


@dataclass
class Trajectory:
    """Decimated run log; ``gamma[i]`` is the clock at iteration ``n[i]``."""

    n: np.ndarray
    gamma: np.ndarray
    f: np.ndarray
    grad_sq: np.ndarray
    theta: np.ndarray | None = None
    status: str = COMPLETED
    stop_n: int | None = None
    xi: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return int(self.n.shape[0])

    def to_csv(self, path, extra: dict | None = None) -> Path:
        path = Path(path)
        cols = {"n": self.n, "gamma": self.gamma, "f": self.f, "grad_norm_sq": self.grad_sq}
        if self.theta is not None:
            for j in range(self.theta.shape[1]):
                cols[f"theta_{j}"] = self.theta[:, j]
        if extra:
            cols.update(extra)
        return write_columns(path, cols, f"status={self.status} stop_n={self.stop_n}")

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        rows, status, stop = [], COMPLETED, None
        with open(path, newline="") as fh:
            lines = fh.read().splitlines()
        header = lines[0].split(",")
        for line in lines[1:]:
            if line.startswith("#"):
                for tok in line[1:].split():
                    key, _, val = tok.partition("=")
                    if key == "status":
                        status = val
                    elif key == "stop_n" and val != "None":
                        stop = int(val)
                continue
            if line:
                rows.append([float(x) for x in line.split(",")])
        data = np.array(rows, dtype=np.float64).reshape(-1, len(header))
        col = {h: data[:, i] for i, h in enumerate(header)}
        tcols = [h for h in header if h.startswith("theta_")]
        theta = np.column_stack([col[h] for h in tcols]) if tcols else None
        return cls(col["n"].astype(np.int64), col["gamma"], col["f"], col["grad_norm_sq"],
                   theta=theta, status=status, stop_n=stop)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_columns(path, cols: dict, footer: str = "") -> Path:
    """Write equal-length columns as CSV with round-trip float formatting."""
    path = Path(path)
    length = len(next(iter(cols.values()))) if cols else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for i in range(length):
            w.writerow([_fmt(cols[k][i]) for k in cols])
        if footer:
            fh.write(f"# {footer}\n")
    return path


@njit(cache=True)
def _advance(value_fn, grad_fn, params, theta, alphas, xis, n0, idx, pos,
             rec_n, rec_g, rec_f, rec_gs, rec_th, total, comp, radius2):
    """Run one block of steps; returns (status, steps_done, pos, total, comp).

    status 0: block finished, 1: diverged, 2: non-finite iterate.
    """
    d = theta.shape[0]
    m = alphas.shape[0]
    nidx = idx.shape[0]
    for i in range(m):
        if pos < nidx and idx[pos] == n0 + i:
            rec_n[pos] = n0 + i
            rec_g[pos] = total
            rec_f[pos] = value_fn(theta, params)
            g = grad_fn(theta, params)
            rec_gs[pos] = np.dot(g, g)
            for j in range(d):
                rec_th[pos, j] = theta[j]
            pos += 1
        else:
            g = grad_fn(theta, params)
        a = alphas[i]
        nrm2 = 0.0
        finite = True
        for j in range(d):
            theta[j] = theta[j] - a * (g[j] + xis[i, j])
            nrm2 += theta[j] * theta[j]
            if not np.isfinite(theta[j]):
                finite = False
        y = a - comp
        t = total + y
        comp = (t - total) - y
        total = t
        if not finite:
            return 2, i + 1, pos, total, comp
        if nrm2 > radius2:
            return 1, i + 1, pos, total, comp
    return 0, m, pos, total, comp


def _validate(cfg: RunConfig, oracle: ObjectiveOracle) -> np.ndarray:
    theta0 = np.array(cfg.theta0, dtype=np.float64).ravel()
    if theta0.shape[0] != oracle.dim:
        raise ConfigError("theta0", f"dimension {theta0.shape[0]} != objective dimension {oracle.dim}")
    if cfg.max_iters < 1:
        raise ConfigError("max_iters", "must be >= 1")
    if not cfg.divergence_radius > np.linalg.norm(theta0):
        raise ConfigError("divergence_radius", "must exceed ||theta0||")
    if cfg.schedule.horizon is not None and cfg.schedule.horizon < cfg.max_iters:
        raise ConfigError("schedule", "explicit schedule shorter than max_iters")
    return theta0


def run(cfg: RunConfig) -> Trajectory:
    oracle = cfg.resolve()
    theta = _validate(cfg, oracle)
    noise = cfg.noise.build(oracle.dim) if isinstance(cfg.noise, NoiseSpec) else cfg.noise
    if noise.dim != oracle.dim:
        raise ConfigError("noise", f"noise dimension {noise.dim} != objective dimension {oracle.dim}")
    idx = log_indices(cfg.max_iters, cfg.log_ratio, cfg.log_every)
    k, d = idx.shape[0], oracle.dim
    rec_n = np.zeros(k + 1, dtype=np.int64)
    rec_g, rec_f, rec_gs = np.zeros(k + 1), np.zeros(k + 1), np.zeros(k + 1)
    rec_th = np.zeros((k + 1, d))
    xi_log = np.zeros((cfg.max_iters, d)) if cfg.record_noise else None
    fast = oracle.jit and noise.state_independent and not cfg.force_python
    step = _run_blocks if fast else _run_python
    status, n_done, pos, theta, total = step(cfg, oracle, noise, theta, idx,
                                             (rec_n, rec_g, rec_f, rec_gs, rec_th), xi_log)
    if status == 1 or n_done == cfg.max_iters and pos < k:
        # final (or first out-of-radius) iterate
        rec_n[pos], rec_g[pos] = n_done, total
        rec_f[pos] = oracle.value(theta)
        g = oracle.gradient(theta)
        rec_gs[pos] = float(g @ g)
        rec_th[pos] = theta
        pos += 1
    traj = Trajectory(rec_n[:pos].copy(), rec_g[:pos].copy(), rec_f[:pos].copy(),
                      rec_gs[:pos].copy(), rec_th[:pos].copy() if cfg.record_theta else None,
                      status=_STATUS[status], stop_n=None if status == 0 else n_done,
                      xi=None if xi_log is None else xi_log[:n_done])
    traj.meta = {"objective": oracle.name, "schedule": cfg.schedule.describe(),
                 "noise": cfg.noise.describe() if isinstance(cfg.noise, NoiseSpec) else noise.kind,
                 "max_iters": cfg.max_iters}
    return traj


def _run_blocks(cfg, oracle, noise, theta, idx, recs, xi_log):
    total, comp, pos, n = 0.0, 0.0, 0, 0
    radius2 = cfg.divergence_radius ** 2
    while n < cfg.max_iters:
        m = min(_CHUNK, cfg.max_iters - n)
        alphas = cfg.schedule.alphas(n, n + m)
        xis = noise.block(m)
        status, done, pos, total, comp = _advance(
            oracle.value_fn, oracle.grad_fn, oracle.params, theta, alphas, xis, n, idx, pos,
            *recs, total, comp, radius2)
        if xi_log is not None:
            xi_log[n: n + done] = xis[:done]
        n += done
        if status:
            return status, n, pos, theta, total
    return 0, n, pos, theta, total


def _run_python(cfg, oracle, noise, theta, idx, recs, xi_log):
    rec_n, rec_g, rec_f, rec_gs, rec_th = recs
    clock = GammaClock()
    radius2 = cfg.divergence_radius ** 2
    pos, nidx = 0, idx.shape[0]
    alphas = np.empty(0)
    for n in range(cfg.max_iters):
        if n % _CHUNK == 0:
            alphas = cfg.schedule.alphas(n, min(n + _CHUNK, cfg.max_iters))
        g = oracle.gradient(theta)
        if pos < nidx and idx[pos] == n:
            rec_n[pos], rec_g[pos] = n, clock.gamma
            rec_f[pos], rec_gs[pos] = oracle.value(theta), float(g @ g)
            rec_th[pos] = theta
            pos += 1
        xi = noise.next_noise(theta, g)
        if xi_log is not None:
            xi_log[n] = xi
        theta = sgd_step(theta, alphas[n % _CHUNK], g, xi)
        clock.advance(alphas[n % _CHUNK])
        if not np.all(np.isfinite(theta)):
            return 2, n + 1, pos, theta, clock.gamma
        if float(theta @ theta) > radius2:
            return 1, n + 1, pos, theta, clock.gamma
    return 0, cfg.max_iters, pos, theta, clock.gamma


def tail_oscillation(traj: Trajectory, n0: int) -> float:
    """``max_{logged k >= n0} ||theta_k - theta_{n0}||`` (``n0`` snapped to the next logged n)."""
    if traj.theta is None:
        raise ValueError("trajectory does not store theta")
    if len(traj) == 0 or n0 > traj.n[-1]:
        raise ValueError(f"n0={n0} beyond trajectory horizon")
    i0 = int(np.searchsorted(traj.n, n0, side="left"))
    diffs = traj.theta[i0:] - traj.theta[i0]
    return float(np.sqrt((diffs * diffs).sum(axis=1)).max())
