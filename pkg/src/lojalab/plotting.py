"""Plot-data files (whitespace columns, gnuplot friendly) and PNG figures.

Figures are drawn with the non-interactive Agg backend straight to files;
nothing here opens a window.
"""
from __future__ import annotations

import math
import warnings
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .engine import Trajectory  # noqa: E402
from .rates import FitResult, quantity_values  # noqa: E402

# Strip the version string so figures do not change with the matplotlib release
_PNG_META = {"Software": None}


def plotdata_columns(traj: Trajectory, quantity: str, fit: FitResult | None = None,
                     fhat: float = 0.0, theta_hat=None):
    """``(log_gamma, log_q, fitted, in_window)`` for rows with ``gamma > 0`` and ``q > 0``.

    Returns the columns and the number of rows dropped for a non-positive quantity.
    """
    if len(traj) == 0:
        empty = np.empty(0)
        return (empty, empty, empty, np.empty(0, dtype=int)), 0
    q = quantity_values(traj, quantity, fhat, theta_hat)
    g = traj.gamma
    live = g > 0
    keep = live & (q > 0) & np.isfinite(q)
    dropped = int(live.sum() - keep.sum())
    lg, lq = np.log(g[keep]), np.log(q[keep])
    if fit is not None and math.isfinite(fit.slope):
        fitted = fit.intercept + fit.slope * lg
        inside = ((g[keep] >= fit.gamma_lo) & (g[keep] <= fit.gamma_hi)).astype(int)
    else:
        fitted = np.full(lg.shape, np.nan)
        inside = np.zeros(lg.shape, dtype=int)
    return (lg, lq, fitted, inside), dropped


def emit_plotdata(traj: Trajectory, quantity: str, path, fit: FitResult | None = None,
                  fhat: float = 0.0, theta_hat=None) -> int:
    """Write a plot-data file; returns the number of dropped rows."""
    (lg, lq, fitted, inside), dropped = plotdata_columns(traj, quantity, fit, fhat, theta_hat)
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(f"# quantity={quantity} dropped_nonpositive={dropped}\n")
        if fit is not None and math.isfinite(fit.slope):
            fh.write(f"# slope={float(fit.slope)!r} intercept={float(fit.intercept)!r}\n")
        fh.write("# log_gamma log_q fitted in_window\n")
        for i in range(lg.shape[0]):
            fh.write(f"{float(lg[i])!r} {float(lq[i])!r} {float(fitted[i])!r} {int(inside[i])}\n")
    if lg.shape[0] == 0:
        warnings.warn(f"{path.name}: no plottable rows", stacklevel=2)
    if dropped:
        warnings.warn(f"{path.name}: dropped {dropped} rows with non-positive {quantity}",
                      stacklevel=2)
    return dropped


def _save(fig, path):
    fig.savefig(path, dpi=100, metadata=_PNG_META)
    plt.close(fig)


def render_rate_figure(traj: Trajectory, fits: list[FitResult], path, fhat: float = 0.0,
                       theta_hat=None, title: str = "") -> Path:
    """One panel per fitted quantity: log q against log gamma with the OLS line."""
    fig, axes = plt.subplots(1, max(len(fits), 1), figsize=(4.2 * max(len(fits), 1), 3.6),
                             squeeze=False)
    for ax, fit in zip(axes[0], fits):
        limit = theta_hat if fit.quantity != "theta_gap" or theta_hat is not None else (
            traj.theta[-1] if traj.theta is not None else None)
        (lg, lq, fitted, inside), _ = plotdata_columns(traj, fit.quantity, fit, fhat, limit)
        ax.plot(lg, lq, ".", ms=2, color="0.5", label="logged")
        sel = inside.astype(bool)
        if sel.any():
            ax.plot(lg[sel], fitted[sel], "-", color="C3",
                    label=f"slope {fit.slope:+.3f}")
        ax.set_xlabel("log gamma")
        ax.set_ylabel(f"log {fit.quantity}")
        ax.set_title(f"{fit.quantity}: {fit.verdict}", fontsize=9)
        ax.legend(fontsize=7)
    if title:
        fig.suptitle(title, fontsize=9)
    fig.tight_layout()
    path = Path(path)
    _save(fig, path)
    return path


def render_series_figure(x, series: dict, path, xlabel: str = "n", logx: bool = True,
                         logy: bool = False, title: str = "") -> Path:
    """Simple multi-line figure used for identification and training logs."""
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    x = np.asarray(x, dtype=np.float64)
    for label, y in series.items():
        y = np.asarray(y, dtype=np.float64)
        ok = np.isfinite(y) & ((x > 0) if logx else True) & ((y > 0) if logy else True)
        ax.plot(x[ok], y[ok], "-", lw=1, label=label)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.legend(fontsize=7)
    if title:
        ax.set_title(title, fontsize=9)
    fig.tight_layout()
    path = Path(path)
    _save(fig, path)
    return path
