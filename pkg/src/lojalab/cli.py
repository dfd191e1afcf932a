"""Command line entry point: ``lojalab <subcommand> ...``."""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import arma, experiment, plotting, rates
from .engine import ConfigError, Trajectory, write_columns
from .schedule import StepSchedule, validate_schedule


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()] if text else []


def _common(p: argparse.ArgumentParser, seed=True, jobs=True):
    if seed:
        p.add_argument("--seed", type=int, default=None, help="base seed (overrides the config)")
    if jobs:
        p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p.add_argument("--out", default=None, help="output root (default $LOJA_OUT or ./loja_out)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lojalab", description="stochastic gradient search laboratory")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment config")
    p.add_argument("config")
    _common(p)

    p = sub.add_parser("suite", help="run every shipped acceptance config")
    p.add_argument("--configs", default=None, help="directory of configs (default: shipped)")
    _common(p)

    p = sub.add_parser("rates", help="fit decay rates of a trajectory CSV")
    p.add_argument("trajectory")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--r", type=float, default=math.inf, help="noise exponent (default inf)")
    p.add_argument("--fhat", type=float, default=0.0)
    p.add_argument("--window", type=float, nargs=2, default=None, metavar=("LO", "HI"))
    p.add_argument("--tol", type=float, default=0.3)
    _common(p, seed=False, jobs=False)

    p = sub.add_parser("arma-sim", help="simulate an ARMA signal to CSV")
    p.add_argument("--ar", default="0.5")
    p.add_argument("--ma", default="0.3")
    p.add_argument("--noise-var", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=10_000)
    _common(p, jobs=False)

    p = sub.add_parser("arma-ident", help="recursive prediction-error identification")
    p.add_argument("--ar", default="0.5")
    p.add_argument("--ma", default="0.3")
    p.add_argument("--noise-var", type=float, default=1.0)
    p.add_argument("--M", type=int, default=1)
    p.add_argument("--N", type=int, default=1)
    p.add_argument("--a", type=float, default=0.8)
    p.add_argument("--c", type=float, default=0.1)
    p.add_argument("--steps", type=int, default=1_000_000)
    p.add_argument("--theta0", default=None, help="comma separated; default zeros")
    p.add_argument("--guard", type=float, default=0.01)
    p.add_argument("--policy", choices=("halt", "project"), default="halt")
    p.add_argument("--repetitions", type=int, default=1)
    _common(p)

    p = sub.add_parser("mlp-train", help="online training of a two-layer perceptron")
    p.add_argument("--M", type=int, default=2)
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--activation", choices=("logistic", "gaussian"), default="logistic")
    p.add_argument("--L", type=float, default=2.0)
    p.add_argument("--target", choices=("teacher", "constant"), default="teacher")
    p.add_argument("--constant", type=float, default=0.5)
    p.add_argument("--teacher-seed", type=int, default=7)
    p.add_argument("--a", type=float, default=0.8)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=100_000)
    p.add_argument("--eval-size", type=int, default=10_000)
    p.add_argument("--repetitions", type=int, default=1)
    _common(p)

    p = sub.add_parser("validate-schedule", help="check a step-size schedule")
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--steps-file", default=None, help="one step size per line")
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--horizon", type=int, default=1_000_000)
    return ap


def _report_result(res: experiment.ExperimentResult) -> int:
    print(res.summary, end="")
    print(f"outputs in {res.outdir}")
    return 0 if res.ok else 1


def _run_data(data: dict, args) -> int:
    cfg = experiment.parse_config(data, seed=args.seed)
    return _report_result(experiment.run_experiment(cfg, args.out, jobs=args.jobs))


def cmd_run(args) -> int:
    cfg = experiment.load_config(args.config, seed=args.seed)
    return _report_result(experiment.run_experiment(cfg, args.out, jobs=args.jobs))


def cmd_suite(args) -> int:
    results = experiment.run_suite(args.out, jobs=args.jobs, seed=args.seed,
                                   config_dir=args.configs)
    width = max(len(r.name) for r in results)
    for r in results:
        extra = "" if r.ok else f"  slower={r.slower} failed={','.join(r.failed_checks)}"
        print(f"{r.name:<{width}}  {'ok' if r.ok else 'FAIL'}{extra}")
    bad = [r for r in results if not r.ok]
    print(f"{len(results) - len(bad)}/{len(results)} experiments ok")
    return 1 if bad else 0


def cmd_rates(args) -> int:
    traj = Trajectory.from_csv(args.trajectory)
    traj.meta = {"objective": Path(args.trajectory).stem}
    rep = rates.measure(traj, args.mu, args.fhat, args.r, window=args.window, tol=args.tol)
    print(rep.summary())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        rates.write_report_csv([rep], out / "rates.csv")
        limit = traj.theta[-1] if traj.theta is not None else None
        for fit in rep.fits:
            plotting.emit_plotdata(traj, fit.quantity, out / f"plotdata_{fit.quantity}.dat", fit=fit,
                                   fhat=args.fhat,
                                   theta_hat=limit if fit.quantity == "theta_gap" else None)
        plotting.render_rate_figure(traj, rep.fits, out / "fig_rates.png", fhat=args.fhat,
                                    theta_hat=limit)
    return 1 if rep.any_slower else 0


def cmd_arma_sim(args) -> int:
    system = arma.ArmaSystem.arma(_floats(args.ar) or [0.0], _floats(args.ma), args.noise_var)
    seed = 0 if args.seed is None else args.seed
    y = arma.simulate_signal(system, args.steps, seed=seed)
    root = experiment.output_root(args.out)
    root.mkdir(parents=True, exist_ok=True)
    path = write_columns(root / f"arma_signal_s{seed}.csv",
                         {"n": np.arange(args.steps), "y": y})
    print(f"wrote {args.steps} samples to {path}")
    return 0


def cmd_arma_ident(args) -> int:
    data = {"name": "arma_ident", "kind": "arma", "repetitions": args.repetitions,
            "system": {"ar": _floats(args.ar) or [0.0], "ma": _floats(args.ma),
                       "noise_var": args.noise_var},
            "model": {"M": args.M, "N": args.N},
            "schedule": {"a": args.a, "c": args.c}, "max_iters": args.steps,
            "guard": args.guard, "policy": args.policy}
    if args.theta0:
        data["theta0"] = _floats(args.theta0)
    return _run_data(data, args)


def cmd_mlp_train(args) -> int:
    rng = np.random.default_rng(args.teacher_seed)
    data = {"name": "mlp_train", "kind": "mlp", "repetitions": args.repetitions,
            "mlp": {"M": args.M, "N": args.N, "activation": args.activation, "L": args.L,
                    "target": args.target, "constant": args.constant,
                    "eval_size": args.eval_size},
            "schedule": {"a": args.a, "c": args.c}, "max_iters": args.steps}
    if args.target == "teacher":
        data["mlp"]["teacher"] = {"a": rng.uniform(-1, 1, args.M).tolist(),
                                  "B": rng.uniform(-1, 1, (args.M, args.N)).tolist()}
    return _run_data(data, args)


def cmd_validate_schedule(args) -> int:
    if args.steps_file:
        steps = np.loadtxt(args.steps_file, ndmin=1)
        sched = StepSchedule.explicit(steps, r=args.r)
    elif args.a is not None:
        sched = StepSchedule.power_law(args.a, args.c, r=args.r)
    else:
        print("validate-schedule: give --a or --steps-file", file=sys.stderr)
        return 2
    rep = validate_schedule(sched, horizon=args.horizon)
    print(rep.summary())
    return 0 if rep.admissible else 1


COMMANDS = {"run": cmd_run, "suite": cmd_suite, "rates": cmd_rates, "arma-sim": cmd_arma_sim,
            "arma-ident": cmd_arma_ident, "mlp-train": cmd_mlp_train,
            "validate-schedule": cmd_validate_schedule}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
