"""Experiment configs and the seeded batch driver behind ``run`` and ``suite``.

A config is one JSON object with a ``kind`` of ``sgd``, ``arma``, ``mlp``,
``rates`` or ``diagnostics``. Repetition ``i`` runs with seed ``seed + i``.
Outputs for an experiment land in ``<out>/<name>/`` and are written to a
scratch directory first, so a failed run leaves nothing behind.
"""
from __future__ import annotations

import csv
import json
import math
import os
import shutil
import tempfile
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import arma, mlp, plotting, rates
from .checks import REGISTRY as CHECKS, Check, run_check
from .engine import ConfigError, RunConfig, Trajectory, run, tail_oscillation
from .noise import NoiseSpec
from .objectives import get_objective, quadratic
from .schedule import StepSchedule

KINDS = ("sgd", "arma", "mlp", "rates", "diagnostics")
_MISSING = object()


def shipped_config_dir() -> Path:
    return Path(str(resources.files("lojalab") / "configs"))


class Section:
    """Typed access to a config object that reports errors by field path."""

    def __init__(self, data, path: str = ""):
        if not isinstance(data, dict):
            raise ConfigError(path or "<root>", "expected an object")
        self.data, self.path = data, path

    def _p(self, key):
        return f"{self.path}.{key}" if self.path else key

    def has(self, key) -> bool:
        return key in self.data

    def get(self, key, kind, default=_MISSING):
        if key not in self.data or self.data[key] is None and default is not _MISSING:
            if default is _MISSING:
                raise ConfigError(self._p(key), "missing required field")
            return default
        v = self.data[key]
        ok = {"number": lambda x: isinstance(x, (int, float)) and not isinstance(x, bool),
              "int": lambda x: isinstance(x, int) and not isinstance(x, bool),
              "str": lambda x: isinstance(x, str),
              "bool": lambda x: isinstance(x, bool),
              "list": lambda x: isinstance(x, list),
              "any": lambda x: True}[kind](v)
        if not ok:
            raise ConfigError(self._p(key), f"expected {kind}, got {type(v).__name__}")
        return float(v) if kind == "number" else v

    def vector(self, key, default=_MISSING):
        v = self.get(key, "list", default)
        if v is default:
            return v
        try:
            return np.array(v, dtype=np.float64)
        except (TypeError, ValueError):
            raise ConfigError(self._p(key), "expected a list of numbers") from None

    def sub(self, key, required: bool = True) -> "Section":
        if key not in self.data:
            if required:
                raise ConfigError(self._p(key), "missing required section")
            return Section({}, self._p(key))
        return Section(self.data[key], self._p(key))


@dataclass
class ExperimentConfig:
    name: str
    kind: str
    data: dict
    seed: int = 0
    repetitions: int = 1
    base_dir: Path = field(default_factory=Path)

    def section(self) -> Section:
        return Section(self.data)


def parse_config(data: dict, name: str | None = None, base_dir=None,
                 seed: int | None = None) -> ExperimentConfig:
    sec = Section(data)
    kind = sec.get("kind", "str")
    if kind not in KINDS:
        raise ConfigError("kind", f"unknown kind {kind!r}; expected one of {KINDS}")
    cfg = ExperimentConfig(name=sec.get("name", "str", name or "experiment"), kind=kind,
                           data=data, seed=sec.get("seed", "int", 0),
                           repetitions=sec.get("repetitions", "int", 1),
                           base_dir=Path(base_dir) if base_dir else Path("."))
    if seed is not None:
        cfg.seed = seed
    if cfg.repetitions < 1:
        raise ConfigError("repetitions", "must be >= 1")
    # build everything once so that errors surface before any output exists
    _PLANNERS[kind](cfg.section(), cfg.seed, cfg.base_dir)
    return cfg


def load_config(path, seed: int | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON: {exc}") from None
    return parse_config(data, name=path.stem, base_dir=path.parent, seed=seed)


# -- section builders ------------------------------------------------------

def build_schedule(sec: Section) -> StepSchedule:
    r = sec.get("r", "number", None)
    if sec.has("steps"):
        steps = sec.vector("steps")
        if steps.ndim != 1 or steps.shape[0] == 0 or np.any(steps <= 0):
            raise ConfigError(sec._p("steps"), "expected a non-empty list of positive steps")
        return StepSchedule.explicit(steps, r=r)
    a = sec.get("a", "number")
    c = sec.get("c", "number", 1.0)
    if not 0.0 < a <= 1.0:
        raise ConfigError(sec._p("a"), "must lie in (0, 1]")
    if not c > 0:
        raise ConfigError(sec._p("c"), "must be positive")
    return StepSchedule.power_law(a, c, r=r)


def build_noise(sec: Section, seed: int) -> NoiseSpec:
    kind = sec.get("kind", "str", "none")
    if kind not in ("none", "iid_gaussian", "uniform", "markov"):
        raise ConfigError(sec._p("kind"), f"unknown noise kind {kind!r}")
    return NoiseSpec(kind=kind, sigma=sec.get("sigma", "number", 0.0), seed=seed,
                     rho=sec.get("rho", "number", 0.5),
                     half_width=sec.get("half_width", "number", 0.0))


def _log(sec: Section):
    lg = sec.sub("log", required=False)
    return lg.get("ratio", "number", 1.1), lg.get("every", "int", 0)


def _window(sec: Section):
    w = sec.get("window", "any", None)
    if w is None or w == "last_decade":
        return None
    if isinstance(w, list) and len(w) == 2:
        return float(w[0]), float(w[1])
    raise ConfigError(sec._p("window"), "expected 'last_decade' or [lo, hi]")


@dataclass
class SgdPlan:
    run: RunConfig
    mu: float
    fhat: float
    r: float
    window: tuple | None
    tol: float
    bound_slack: float | None
    exp_slope: float | None
    exp_rtol: float


def _plan_sgd(sec: Section, seed: int, base_dir) -> SgdPlan:
    obj = sec.sub("objective")
    theta0 = sec.vector("theta0")
    oid = obj.get("id", "str")
    dim = obj.get("dim", "int", theta0.shape[0])
    if obj.has("A"):
        try:
            oracle = quadratic(A=obj.vector("A"))
        except ValueError as exc:
            raise ConfigError(obj._p("A"), str(exc)) from None
    else:
        try:
            oracle = get_objective(oid) if oid in ("circle", "cross") else get_objective(oid, dim=dim)
        except (KeyError, ValueError) as exc:
            raise ConfigError(obj._p("id"), str(exc)) from None
    if theta0.shape != (oracle.dim,):
        raise ConfigError("theta0", f"expected {oracle.dim} entries")
    schedule = build_schedule(sec.sub("schedule"))
    noise = build_noise(sec.sub("noise", required=False), seed)
    ratio, every = _log(sec)
    max_iters = sec.get("max_iters", "int")
    if max_iters < 1:
        raise ConfigError("max_iters", "must be >= 1")
    rc = RunConfig(oracle, schedule, theta0, max_iters, noise, log_ratio=ratio, log_every=every,
                   divergence_radius=sec.get("divergence_radius", "number", 1e6))
    rs = sec.sub("rates", required=False)
    mu = rs.get("mu", "number", oracle.known_mu)
    fhat = rs.get("fhat", "number", oracle.known_fhat)
    if mu is None or fhat is None:
        raise ConfigError("rates.mu", "objective has no known exponent; set rates.mu and rates.fhat")
    if noise.kind == "none":
        r = math.inf
    elif schedule.r is None:
        raise ConfigError("schedule.r", "noisy runs need the noise exponent r")
    else:
        r = schedule.r
    try:
        rates.rate_constants(mu, r)
    except ValueError as exc:
        raise ConfigError("rates.mu", str(exc)) from None
    slack = rs.get("bound_slack", "number", None)
    exp_slope = rs.get("exp_slope", "number", None)
    return SgdPlan(rc, mu, fhat, r, _window(rs), rs.get("tol", "number", 0.3), slack, exp_slope,
                   rs.get("exp_rtol", "number", 0.05))


@dataclass
class ArmaPlan:
    system: arma.ArmaSystem
    M: int
    N: int
    schedule: StepSchedule
    theta0: np.ndarray
    max_iters: int
    guard: float
    policy: str
    log: tuple
    target: np.ndarray | None
    theta_tol: float
    f_rel: float | None


def _plan_arma(sec: Section, seed: int, base_dir) -> ArmaPlan:
    s = sec.sub("system")
    ar, ma = s.vector("ar"), s.vector("ma", [])
    try:
        system = arma.ArmaSystem.arma(ar, np.asarray(ma), s.get("noise_var", "number", 1.0))
    except (ValueError, arma.DomainError) as exc:
        raise ConfigError("system", str(exc)) from None
    m = sec.sub("model")
    M, N = m.get("M", "int"), m.get("N", "int")
    if M < 1 or N < 1:
        raise ConfigError("model", "M and N must be >= 1")
    theta0 = sec.vector("theta0", None)
    theta0 = np.zeros(M + N) if theta0 is None else theta0
    if theta0.shape != (M + N,):
        raise ConfigError("theta0", f"expected {M + N} entries")
    guard = sec.get("guard", "number", 0.01)
    if arma.stability_check(theta0, M).margin < guard:
        raise ConfigError("theta0", "outside the stability region")
    policy = sec.get("policy", "str", "halt")
    if policy not in ("halt", "project"):
        raise ConfigError("policy", "expected 'halt' or 'project'")
    ck = sec.sub("checks", required=False)
    target = ck.vector("target", None)
    if target is not None and target.shape != (M + N,):
        raise ConfigError("checks.target", f"expected {M + N} entries")
    return ArmaPlan(system, M, N, build_schedule(sec.sub("schedule")), theta0,
                    sec.get("max_iters", "int"), guard, policy, _log(sec), target,
                    ck.get("theta_tol", "number", 0.1), ck.get("f_rel", "number", None))


@dataclass
class MlpPlan:
    params0: mlp.PerceptronParams
    activation: mlp.Activation
    source: mlp.TrainingSource
    schedule: StepSchedule
    max_iters: int
    eval_size: int
    log: tuple
    heldout_max: float | None
    tail_max: float | None
    tail_at: float


def _plan_mlp(sec: Section, seed: int, base_dir) -> MlpPlan:
    m = sec.sub("mlp")
    M, N = m.get("M", "int"), m.get("N", "int")
    if M < 1 or N < 1:
        raise ConfigError("mlp", "M and N must be >= 1")
    try:
        act = mlp.Activation(m.get("activation", "str", "logistic"))
    except ValueError as exc:
        raise ConfigError("mlp.activation", str(exc)) from None
    L = m.get("L", "number", 1.0)
    # configured seeds are offsets from the repetition seed
    init_seed = seed + m.get("init_seed", "int", 0)
    data_seed = seed + m.get("data_seed", "int", 0)
    target = m.get("target", "str", "teacher")
    teacher = None
    if target == "teacher":
        t = m.sub("teacher")
        try:
            teacher = mlp.PerceptronParams(t.vector("a"), t.vector("B"))
        except ValueError as exc:
            raise ConfigError("mlp.teacher", str(exc)) from None
        if teacher.M != M or teacher.N != N:
            raise ConfigError("mlp.teacher", "shape differs from mlp.M, mlp.N")
    elif target != "constant":
        raise ConfigError("mlp.target", "expected 'teacher' or 'constant'")
    source = mlp.TrainingSource(N=N, L=L, kind=target, teacher=teacher, activation=act,
                                constant=m.get("constant", "number", 0.0),
                                noise_std=m.get("noise_std", "number", 0.0), seed=data_seed)
    init = m.get("init", "str", "uniform")
    scale = m.get("init_scale", "number", 0.5)
    rng = np.random.default_rng(init_seed)
    if init == "near_teacher":
        if teacher is None:
            raise ConfigError("mlp.init", "near_teacher needs a teacher target")
        params0 = mlp.PerceptronParams(teacher.a + rng.uniform(-scale, scale, M),
                                       teacher.B + rng.uniform(-scale, scale, (M, N)))
    elif init == "uniform":
        params0 = mlp.PerceptronParams(rng.uniform(-scale, scale, M),
                                       rng.uniform(-scale, scale, (M, N)))
    else:
        raise ConfigError("mlp.init", "expected 'uniform' or 'near_teacher'")
    ck = sec.sub("checks", required=False)
    return MlpPlan(params0, act, source, build_schedule(sec.sub("schedule")),
                   sec.get("max_iters", "int"), m.get("eval_size", "int", 10_000), _log(sec),
                   ck.get("heldout_max", "number", None), ck.get("tail_max", "number", None),
                   ck.get("tail_at", "number", 0.9))


@dataclass
class RatesPlan:
    trajectory: Path
    mu: float
    r: float
    fhat: float
    window: tuple | None
    tol: float


def _plan_rates(sec: Section, seed: int, base_dir) -> RatesPlan:
    p = Path(sec.get("trajectory", "str"))
    if not p.is_absolute():
        p = Path(base_dir) / p
    if not p.exists():
        raise ConfigError("trajectory", f"file not found: {p}")
    mu, r = sec.get("mu", "number"), sec.get("r", "any", "inf")
    r = math.inf if r in ("inf", None) else float(r)
    try:
        rates.rate_constants(mu, r)
    except ValueError as exc:
        raise ConfigError("mu", str(exc)) from None
    return RatesPlan(p, mu, r, sec.get("fhat", "number", 0.0), _window(sec),
                     sec.get("tol", "number", 0.3))


def _plan_diagnostics(sec: Section, seed: int, base_dir) -> list[dict]:
    checks = sec.get("checks", "list")
    for i, spec in enumerate(checks):
        s = Section(spec, f"checks[{i}]")
        kind = s.get("type", "str")
        if kind not in CHECKS:
            raise ConfigError(f"checks[{i}].type", f"unknown check {kind!r}")
    return checks


_PLANNERS = {"sgd": _plan_sgd, "arma": _plan_arma, "mlp": _plan_mlp, "rates": _plan_rates,
             "diagnostics": _plan_diagnostics}


# -- execution -------------------------------------------------------------

@dataclass
class RepOutcome:
    index: int
    seed: int
    trajectory: Trajectory | None = None
    ident: arma.IdentResult | None = None
    mlp_run: mlp.MlpRun | None = None
    report: rates.RateReport | None = None
    checks: list[Check] = field(default_factory=list)
    theta_hat: np.ndarray | None = None


def upper_bound_verdicts(report: rates.RateReport, slack: float, tol: float) -> None:
    """Re-grade finite predictions as one-sided bounds: slower only above ``-pred + slack``."""
    for f in report.fits:
        if f.verdict == "inconclusive" or not math.isfinite(f.predicted):
            continue
        if f.slope > -f.predicted + slack:
            f.verdict = "slower"
        elif f.slope < -f.predicted - tol:
            f.verdict = "faster"
        else:
            f.verdict = "consistent"


def _run_sgd(plan: SgdPlan, i: int, seed: int) -> RepOutcome:
    traj = run(plan.run)
    rep = rates.measure(traj, plan.mu, plan.fhat, plan.r, window=plan.window, tol=plan.tol)
    rep.meta["fhat"] = plan.fhat
    if plan.bound_slack is not None:
        upper_bound_verdicts(rep, plan.bound_slack, plan.tol)
    checks = [Check("status", traj.status == "completed", f"run status {traj.status}")]
    if plan.exp_slope is not None:
        fit = rep.fit("f_gap")
        rel = abs(fit.exp_slope - plan.exp_slope) / abs(plan.exp_slope)
        checks.append(Check("exponential_slope", fit.exponential and rel <= plan.exp_rtol,
                            f"d log f / d gamma = {fit.exp_slope:+.4f} vs {plan.exp_slope:+g} "
                            f"(rel {rel:.4f}), detector {'fired' if fit.exponential else 'silent'}"))
    return RepOutcome(i, seed, trajectory=traj, report=rep, checks=checks)


def _run_arma(plan: ArmaPlan, i: int, seed: int) -> RepOutcome:
    res = arma.identify(plan.system, plan.M, plan.N, plan.schedule, plan.theta0, plan.max_iters,
                        guard=plan.guard, policy=plan.policy, seed=seed, log_ratio=plan.log[0],
                        log_every=plan.log[1])
    checks = [Check("status", res.status == "completed", f"identify status {res.status}")]
    if plan.target is not None:
        dist = float(np.linalg.norm(res.final_theta() - plan.target))
        checks.append(Check("theta_distance", dist <= plan.theta_tol,
                            f"||theta_end - theta*|| = {dist:.4g} (tol {plan.theta_tol:g})"))
        if plan.f_rel is not None:
            f_star = arma.asymptotic_mse(arma.ModelTheta.from_flat(plan.target, plan.M), plan.system)
            f_end = float(res.f_theta[-1])
            checks.append(Check("f_relative", f_end <= (1 + plan.f_rel) * f_star,
                                f"f(theta_end) = {f_end:.6g} vs f(theta*) = {f_star:.6g}"))
    return RepOutcome(i, seed, ident=res, trajectory=res.to_trajectory(), checks=checks)


def _run_mlp(plan: MlpPlan, i: int, seed: int) -> RepOutcome:
    res = mlp.train(plan.params0, plan.activation, plan.source, plan.schedule, plan.max_iters,
                    eval_size=plan.eval_size, log_ratio=plan.log[0], log_every=plan.log[1])
    checks = [Check("status", res.trajectory.status == "completed",
                    f"train status {res.trajectory.status}")]
    if plan.heldout_max is not None:
        h = float(res.heldout[-1])
        checks.append(Check("heldout_loss", h <= plan.heldout_max,
                            f"final held-out loss {h:.3e} (max {plan.heldout_max:g})"))
    if plan.tail_max is not None:
        osc = tail_oscillation(res.trajectory, int(plan.tail_at * plan.max_iters))
        checks.append(Check("tail_oscillation", osc <= plan.tail_max,
                            f"tail oscillation from {plan.tail_at:g} horizon {osc:.3e} "
                            f"(max {plan.tail_max:g})"))
    return RepOutcome(i, seed, mlp_run=res, trajectory=res.trajectory, checks=checks)


def _run_rates(plan: RatesPlan, i: int, seed: int) -> RepOutcome:
    traj = Trajectory.from_csv(plan.trajectory)
    traj.meta = {"objective": plan.trajectory.stem}
    rep = rates.measure(traj, plan.mu, plan.fhat, plan.r, window=plan.window, tol=plan.tol)
    rep.meta["fhat"] = plan.fhat
    return RepOutcome(i, seed, trajectory=traj, report=rep)


def _run_diagnostics(plan: list[dict], i: int, seed: int) -> RepOutcome:
    return RepOutcome(i, seed, checks=[run_check(spec) for spec in plan])


_RUNNERS = {"sgd": _run_sgd, "arma": _run_arma, "mlp": _run_mlp, "rates": _run_rates,
            "diagnostics": _run_diagnostics}


def _run_rep(kind: str, data: dict, base_dir: str, seed: int, i: int) -> RepOutcome:
    plan = _PLANNERS[kind](Section(data), seed, base_dir)
    return _RUNNERS[kind](plan, i, seed)


@dataclass
class ExperimentResult:
    name: str
    kind: str
    outdir: Path
    reports: list[rates.RateReport]
    checks: list[Check]
    summary: str

    @property
    def slower(self) -> int:
        return sum(f.verdict == "slower" for r in self.reports for f in r.fits)

    @property
    def failed_checks(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    @property
    def ok(self) -> bool:
        return self.slower == 0 and not self.failed_checks


def _write_checks_csv(checks: list[tuple[int, Check]], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["repetition", "check", "passed", "detail"])
        for i, c in checks:
            w.writerow([i, c.name, int(c.passed), c.detail])


def _emit_rep(cfg: ExperimentConfig, o: RepOutcome, tmp: Path) -> list[str]:
    lines = [f"[repetition {o.index} seed {o.seed}]"]
    tag = f"r{o.index}_s{o.seed}"
    if o.ident is not None:
        o.ident.to_csv(tmp / f"trajectory_{tag}.csv")
        series = {f"theta_{j}": o.ident.theta[:, j] for j in range(o.ident.theta.shape[1])}
        plotting.render_series_figure(o.ident.n, series, tmp / f"fig_{tag}_theta.png",
                                      title=f"{cfg.name}: identified parameters")
        plotting.render_series_figure(o.ident.n, {"f(theta_n)": o.ident.f_theta,
                                                  "best so far": o.ident.best_so_far()},
                                      tmp / f"fig_{tag}_mse.png", logy=True,
                                      title=f"{cfg.name}: asymptotic MSE")
        lines.append(f"final theta {np.array2string(o.ident.final_theta(), precision=6)}"
                     f"  f {o.ident.f_theta[-1]:.8g}")
    elif o.mlp_run is not None:
        o.mlp_run.to_csv(tmp / f"trajectory_{tag}.csv")
        plotting.render_series_figure(o.mlp_run.trajectory.n,
                                      {"held-out loss": o.mlp_run.heldout,
                                       "running train loss": o.mlp_run.train_loss},
                                      tmp / f"fig_{tag}_loss.png", logy=True,
                                      title=f"{cfg.name}: losses")
        lines.append(f"final held-out loss {o.mlp_run.heldout[-1]:.6g}")
    elif o.trajectory is not None and cfg.kind == "sgd":
        o.trajectory.to_csv(tmp / f"trajectory_{tag}.csv")
    if o.report is not None:
        theta_limit = o.trajectory.theta[-1] if o.trajectory.theta is not None else None
        for fit in o.report.fits:
            limit = theta_limit if fit.quantity == "theta_gap" else None
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                plotting.emit_plotdata(o.trajectory, fit.quantity,
                                       tmp / f"plotdata_{tag}_{fit.quantity}.dat", fit=fit,
                                       fhat=_fhat_of(o), theta_hat=limit)
        plotting.render_rate_figure(o.trajectory, o.report.fits, tmp / f"fig_{tag}_rates.png",
                                    fhat=_fhat_of(o), theta_hat=theta_limit, title=cfg.name)
        lines.append(o.report.summary())
    lines += [c.line() for c in o.checks]
    return lines


def _fhat_of(o: RepOutcome) -> float:
    return float(o.report.meta.get("fhat", 0.0)) if o.report is not None else 0.0


def output_root(out=None) -> Path:
    if out is not None:
        return Path(out)
    return Path(os.environ.get("LOJA_OUT", "loja_out"))


def run_experiment(cfg: ExperimentConfig, out_root=None, jobs: int = 1) -> ExperimentResult:
    """Run every repetition and write its CSV files next to the rendered figures."""
    root = output_root(out_root)
    root.mkdir(parents=True, exist_ok=True)
    seeds = [cfg.seed + i for i in range(cfg.repetitions)]
    args = [(cfg.kind, cfg.data, str(cfg.base_dir), s, i) for i, s in enumerate(seeds)]
    tmp = Path(tempfile.mkdtemp(prefix=f".{cfg.name}.", dir=root))
    try:
        if jobs > 1 and len(args) > 1:
            with ProcessPoolExecutor(max_workers=min(jobs, len(args))) as pool:
                outcomes = list(pool.map(_run_rep, *zip(*args)))
        else:
            outcomes = [_run_rep(*a) for a in args]
        lines = [f"experiment {cfg.name} (kind {cfg.kind}, seed {cfg.seed}, "
                 f"repetitions {cfg.repetitions})"]
        reports, checks = [], []
        for o in outcomes:
            lines += _emit_rep(cfg, o, tmp)
            if o.report is not None:
                reports.append(o.report)
            checks += [(o.index, c) for c in o.checks]
        rates.write_report_csv(reports, tmp / "rates.csv")
        _write_checks_csv(checks, tmp / "checks.csv")
        result = ExperimentResult(cfg.name, cfg.kind, root / cfg.name, reports,
                                  [c for _, c in checks], "")
        lines.append(f"verdict: {'OK' if result.ok else 'FAIL'} "
                     f"({result.slower} slower fits, {len(result.failed_checks)} failed checks)")
        result.summary = "\n".join(lines) + "\n"
        (tmp / "summary.txt").write_text(result.summary)
        final = root / cfg.name
        if final.exists():
            shutil.rmtree(final)
        tmp.rename(final)
        return result
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise


def _suite_one(path: str, out_root: str, seed: int | None) -> ExperimentResult:
    return run_experiment(load_config(path, seed=seed), out_root)


def run_suite(out_root=None, jobs: int = 1, seed: int | None = None,
              config_dir=None) -> list[ExperimentResult]:
    """Run every shipped acceptance config; results come back in file-name order."""
    root = output_root(out_root) / "suite"
    root.mkdir(parents=True, exist_ok=True)
    paths = sorted(Path(config_dir or shipped_config_dir()).glob("*.json"))
    # validate all configs before running any of them
    for p in paths:
        load_config(p, seed=seed)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_suite_one, [str(p) for p in paths],
                                    [str(root)] * len(paths), [seed] * len(paths)))
    else:
        results = [_suite_one(str(p), str(root), seed) for p in paths]
    with open(root / "suite.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["experiment", "kind", "ok", "slower_fits", "failed_checks"])
        for r in results:
            w.writerow([r.name, r.kind, int(r.ok), r.slower, ";".join(r.failed_checks)])
    return results
