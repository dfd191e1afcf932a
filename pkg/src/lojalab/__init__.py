"""lojalab: stochastic gradient search experiments on the gamma clock."""
from __future__ import annotations

from .engine import RunConfig, Trajectory, run, tail_oscillation
from .noise import NoiseSpec
from .objectives import estimate_loj_exponent, get_objective
from .rates import fit_loglog, measure, predict_vs_measure, rate_constants
from .schedule import StepSchedule, validate_schedule

__version__ = "0.1.0"

__all__ = [
    "NoiseSpec", "RunConfig", "StepSchedule", "Trajectory", "estimate_loj_exponent",
    "fit_loglog", "get_objective", "measure", "predict_vs_measure", "rate_constants", "run",
    "tail_oscillation", "validate_schedule",
]
