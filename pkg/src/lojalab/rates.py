"""Rate constants and empirical log-log rate fits against the gamma clock."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from .engine import RunConfig, Trajectory, run

QUANTITIES = ("f_gap", "grad_sq", "theta_gap")
MIN_POINTS = 30


@dataclass(frozen=True)
class RateConstants:
    mu: float
    r: float
    r_hat: float
    p_hat: float
    q_hat: float


def rate_constants(mu: float, r: float) -> RateConstants:
    """``r_hat = 1/(2 - mu)`` (inf at mu=2), ``p_hat = mu*min(r, r_hat)``, ``q_hat = min(r, r_hat) - 1``.

    ``r = inf`` is allowed and stands for a noiseless run.
    """
    if not 1.0 < mu <= 2.0:
        raise ValueError(f"mu={mu} outside (1, 2]")
    if not r > 1.0:
        raise ValueError(f"r={r} must exceed 1")
    r_hat = math.inf if mu == 2.0 else 1.0 / (2.0 - mu)
    m = min(r, r_hat)
    return RateConstants(mu, r, r_hat, mu * m, m - 1.0)


def varphi_case(r: float, r_hat: float) -> str:
    """Position of ``r`` relative to ``r_hat``, which selects the noise functional branch."""
    if not r > 1.0:
        raise ValueError("r must exceed 1")
    if r < r_hat:
        return "below"
    if r == r_hat:
        return "critical"
    return "above"


@dataclass
class FitResult:
    quantity: str
    slope: float
    intercept: float
    halfwidth: float
    predicted: float
    verdict: str
    gamma_lo: float
    gamma_hi: float
    points: int
    dropped: int = 0
    reason: str = ""
    r2_loglog: float = float("nan")
    exp_slope: float = float("nan")
    exp_halfwidth: float = float("nan")
    r2_exp: float = float("nan")
    exponential: bool = False

    def line(self) -> str:
        if self.verdict == "inconclusive":
            return f"{self.quantity:>9s}: inconclusive ({self.reason})"
        s = (f"{self.quantity:>9s}: slope {self.slope:+.4f} +/- {self.halfwidth:.4f}"
             f"  predicted -{self.predicted:.4f}  verdict {self.verdict}"
             f"  [gamma {self.gamma_lo:.4g}..{self.gamma_hi:.4g}, {self.points} pts]")
        if self.exponential:
            s += f"  exponential regime: d log q / d gamma = {self.exp_slope:+.4f}"
        return s


def quantity_values(traj: Trajectory, quantity: str, fhat: float = 0.0,
                    theta_hat=None) -> np.ndarray:
    if quantity == "f_gap":
        return np.abs(traj.f - fhat)
    if quantity == "grad_sq":
        return traj.grad_sq.copy()
    if quantity == "theta_gap":
        if traj.theta is None or theta_hat is None:
            raise ValueError("theta_gap needs stored theta and a limit point")
        diff = traj.theta - np.asarray(theta_hat, dtype=np.float64)
        return np.sqrt((diff * diff).sum(axis=1))
    raise ValueError(f"unknown quantity {quantity!r}")


def resolve_window(gamma: np.ndarray, window) -> tuple[float, float]:
    """``None``/"last_decade" -> the final decade of gamma; else an explicit pair."""
    g_end = float(gamma[-1])
    if window is None or window == "last_decade":
        return g_end / 10.0, g_end
    lo, hi = window
    return float(lo), float(hi)


def verdict_for(slope: float, predicted: float, tol: float) -> str:
    if abs(slope + predicted) <= tol:
        return "consistent"
    if slope < -predicted - tol:
        return "faster"
    return "slower"


def _ols(x, y):
    res = stats.linregress(x, y)
    t = stats.t.ppf(0.975, max(x.shape[0] - 2, 1))
    return res.slope, res.intercept, t * res.stderr, res.rvalue ** 2


def fit_loglog(traj: Trajectory, quantity: str, fhat: float = 0.0, theta_hat=None,
               window=None, predicted: float = math.nan, tol: float = 0.3,
               n_max: int | None = None) -> FitResult:
    """OLS of log(quantity) on log(gamma) over a gamma window.

    The same points are also fitted linearly in gamma; when that fit is better
    the result is flagged as the exponential (gradient-flow) regime.
    """
    q = quantity_values(traj, quantity, fhat, theta_hat)
    g = traj.gamma
    lo, hi = resolve_window(g, window)
    sel = (g >= lo) & (g <= hi) & (g > 0)
    if n_max is not None:
        sel &= traj.n <= n_max
    pos = sel & (q > 0) & np.isfinite(q)
    dropped = int(sel.sum() - pos.sum())
    npts = int(pos.sum())
    base = dict(quantity=quantity, predicted=predicted, gamma_lo=lo, gamma_hi=hi,
                points=npts, dropped=dropped)
    if npts < MIN_POINTS:
        return FitResult(slope=math.nan, intercept=math.nan, halfwidth=math.nan,
                         verdict="inconclusive", reason=f"{npts} usable points < {MIN_POINTS}",
                         **base)
    x, y = np.log(g[pos]), np.log(q[pos])
    slope, icpt, hw, r2 = _ols(x, y)
    es, _, ehw, er2 = _ols(g[pos], y)
    res = FitResult(slope=float(slope), intercept=float(icpt), halfwidth=float(hw),
                    verdict="inconclusive", r2_loglog=float(r2), exp_slope=float(es),
                    exp_halfwidth=float(ehw), r2_exp=float(er2), exponential=bool(er2 > r2),
                    **base)
    if not hi >= 10.0 * lo * (1 - 1e-12):
        res.reason = "fit window spans less than one decade of gamma"
        return res
    if math.isinf(predicted):
        res.verdict = "consistent" if res.exponential else "slower"
    elif math.isfinite(predicted):
        res.verdict = verdict_for(res.slope, predicted, tol)
    return res


@dataclass
class RateReport:
    constants: RateConstants
    fits: list[FitResult]
    objective: str = ""
    schedule: str = ""
    noise: str = ""
    exponential_regime: bool = False
    meta: dict = field(default_factory=dict)

    def fit(self, quantity: str) -> FitResult:
        for f in self.fits:
            if f.quantity == quantity:
                return f
        raise KeyError(quantity)

    @property
    def any_slower(self) -> bool:
        return any(f.verdict == "slower" for f in self.fits)

    def summary(self) -> str:
        c = self.constants
        lines = [f"objective {self.objective}  schedule {self.schedule}  noise {self.noise}",
                 f"constants: mu={c.mu:.6g} r={c.r:.6g} r_hat={c.r_hat:.6g} "
                 f"p_hat={c.p_hat:.6g} q_hat={c.q_hat:.6g}"]
        if self.exponential_regime:
            lines.append("exponential regime detected (log q linear in gamma)")
        lines += [f.line() for f in self.fits]
        return "\n".join(lines)


CSV_FIELDS = ["objective", "schedule", "noise", "quantity", "mu", "r", "r_hat", "p_hat", "q_hat",
              "predicted", "slope", "halfwidth", "intercept", "verdict", "gamma_lo", "gamma_hi",
              "points", "dropped", "exponential", "exp_slope", "reason"]


def report_rows(report: RateReport) -> list[list[str]]:
    c = report.constants
    rows = []
    for f in report.fits:
        vals = [report.objective, report.schedule, report.noise, f.quantity, c.mu, c.r, c.r_hat,
                c.p_hat, c.q_hat, f.predicted, f.slope, f.halfwidth, f.intercept, f.verdict,
                f.gamma_lo, f.gamma_hi, f.points, f.dropped, int(f.exponential), f.exp_slope,
                f.reason]
        rows.append([repr(float(v)) if isinstance(v, float) else str(v) for v in vals])
    return rows


def write_report_csv(reports: list[RateReport], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for rep in reports:
            w.writerows(report_rows(rep))


def measure(traj: Trajectory, known_mu: float, fhat: float, r: float,
            theta_hat=None, window=None, tol: float = 0.3) -> RateReport:
    """Fit all three quantities of a finished run against the predicted exponents."""
    consts = rate_constants(known_mu, r)
    fits = [fit_loglog(traj, "f_gap", fhat, window=window, predicted=consts.p_hat, tol=tol),
            fit_loglog(traj, "grad_sq", fhat, window=window, predicted=consts.p_hat, tol=tol)]
    if traj.theta is not None:
        limit = traj.theta[-1] if theta_hat is None else theta_hat
        n_cut = int(0.9 * traj.n[-1])
        fits.append(fit_loglog(traj, "theta_gap", fhat, theta_hat=limit, window=window,
                               predicted=consts.q_hat, tol=tol, n_max=n_cut))
    rep = RateReport(consts, fits, objective=traj.meta.get("objective", ""),
                     schedule=traj.meta.get("schedule", ""), noise=traj.meta.get("noise", ""))
    rep.exponential_regime = fits[0].exponential
    return rep


def predict_vs_measure(cfg: RunConfig, known_mu: float | None = None, fhat: float | None = None,
                       window=None, tol: float = 0.3) -> tuple[RateReport, Trajectory]:
    """Run ``cfg`` and compare measured decay exponents with the predicted ones.

    A noiseless run satisfies the noise condition for every ``r``, so ``r = inf``
    is used and the prediction is limited by ``r_hat`` alone.
    """
    oracle = cfg.resolve()
    known_mu = oracle.known_mu if known_mu is None else known_mu
    fhat = oracle.known_fhat if fhat is None else fhat
    if known_mu is None or fhat is None:
        raise ValueError("objective has no known exponent / limit value")
    if cfg.noise.kind == "none":
        r = math.inf
    else:
        r = cfg.schedule.r
        if r is None:
            raise ValueError("noisy prediction needs schedule.r")
    traj = run(replace(cfg, oracle=oracle, record_theta=True))
    return measure(traj, known_mu, fhat, r, window=window, tol=tol), traj
