"""Step-size sequences together with the accumulated gamma clock.

The step sequence is ``alpha_n`` and the clock is ``gamma_n = sum_{i<n} alpha_i``.
All clock values are produced by one compensated (Kahan) accumulator so that
the engine and :func:`gamma` agree to the last bit.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from numba import njit

# alphas are generated in aligned blocks so values never depend on how a
# caller slices the index range
_BLOCK = 1 << 16


class ScheduleError(ValueError):
    pass


class WindowCapExceeded(ScheduleError):
    pass


@njit(cache=True)
def kahan_cumsum(alphas, total, comp, out):
    """Write running compensated sums into ``out`` (``len(alphas) + 1``).

    ``out[0]`` is the incoming ``total``. Returns the final ``(total, comp)``.
    """
    out[0] = total
    for i in range(alphas.shape[0]):
        y = alphas[i] - comp
        t = total + y
        comp = (t - total) - y
        total = t
        out[i + 1] = total
    return total, comp


@dataclass
class GammaClock:
    """Per-run clock: ``n`` steps taken, ``gamma`` their accumulated mass."""

    n: int = 0
    gamma: float = 0.0
    comp: float = 0.0

    def advance(self, alpha: float) -> float:
        y = alpha - self.comp
        t = self.gamma + y
        self.comp = (t - self.gamma) - y
        self.gamma = t
        self.n += 1
        return t


class _GammaCache:
    def __init__(self):
        self.lock = threading.Lock()
        self.table = np.zeros(1)
        self.comp = 0.0

    def __reduce__(self):
        return (_GammaCache, ())


@dataclass(frozen=True)
class StepSchedule:
    """Step sequence ``alpha_n`` plus the noise-weighting exponent ``r``.

    ``power_law`` uses ``alpha_n = c / (n + 1)**a`` (shifted by one so that
    ``n = 0`` is defined). ``explicit`` carries a finite list of steps and has
    a hard horizon equal to its length.
    """

    kind: str
    a: float | None = None
    c: float = 1.0
    steps: tuple[float, ...] | None = None
    r: float | None = None
    _cache: _GammaCache = field(default_factory=_GammaCache, repr=False, compare=False)

    def __post_init__(self):
        if self.kind == "power_law":
            if self.a is None or not math.isfinite(self.a) or self.a <= 0:
                raise ScheduleError("power_law schedule needs a positive exponent a")
            if not self.c > 0:
                raise ScheduleError("power_law scale c must be positive")
        elif self.kind == "explicit":
            if not self.steps:
                raise ScheduleError("explicit schedule needs at least one step")
            if any(not (s > 0 and math.isfinite(s)) for s in self.steps):
                raise ScheduleError("explicit steps must be positive and finite")
        else:
            raise ScheduleError(f"unknown schedule kind {self.kind!r}")
        if self.r is not None and not self.r > 0:
            raise ScheduleError("r must be positive")

    @classmethod
    def power_law(cls, a: float, c: float = 1.0, r: float | None = None) -> "StepSchedule":
        return cls("power_law", a=float(a), c=float(c), r=None if r is None else float(r))

    @classmethod
    def explicit(cls, steps: Sequence[float], r: float | None = None) -> "StepSchedule":
        return cls("explicit", steps=tuple(float(s) for s in steps),
                   r=None if r is None else float(r))

    @property
    def horizon(self) -> int | None:
        """Number of defined steps, ``None`` when unbounded."""
        return len(self.steps) if self.kind == "explicit" else None

    def describe(self) -> str:
        if self.kind == "power_law":
            return f"power_law(a={self.a:g},c={self.c:g})"
        return f"explicit(len={len(self.steps)})"

    def _block(self, b: int) -> np.ndarray:
        idx = np.arange(b * _BLOCK, (b + 1) * _BLOCK, dtype=np.float64)
        return self.c / (idx + 1.0) ** self.a

    def alphas(self, start: int, stop: int) -> np.ndarray:
        """Steps ``alpha_start .. alpha_{stop-1}`` as a float64 array."""
        if start < 0 or stop < start:
            raise ScheduleError(f"bad step range [{start}, {stop})")
        if self.kind == "explicit":
            if stop > len(self.steps):
                raise ScheduleError(
                    f"explicit schedule has {len(self.steps)} steps, asked for index {stop - 1}")
            return np.asarray(self.steps[start:stop], dtype=np.float64)
        if stop == start:
            return np.empty(0)
        first, last = start // _BLOCK, (stop - 1) // _BLOCK
        parts = [self._block(b) for b in range(first, last + 1)]
        out = np.concatenate(parts) if len(parts) > 1 else parts[0]
        off = start - first * _BLOCK
        return out[off: off + stop - start].copy()

    def alpha(self, n: int) -> float:
        return float(self.alphas(n, n + 1)[0])

    def gamma_table(self, n: int) -> np.ndarray:
        """Return ``[gamma_0, ..., gamma_n]`` (a read-only view)."""
        if n < 0:
            raise ScheduleError("n must be nonnegative")
        cache = self._cache
        with cache.lock:
            have = cache.table.shape[0] - 1
            if n > have:
                target = max(n, 2 * have, 1024)
                if self.horizon is not None:
                    target = min(target, self.horizon)
                    if n > target:
                        raise ScheduleError(
                            f"explicit schedule horizon {self.horizon} < requested {n}")
                ext = np.empty(target - have + 1)
                total, comp = kahan_cumsum(self.alphas(have, target), cache.table[-1],
                                           cache.comp, ext)
                cache.table = np.concatenate([cache.table, ext[1:]])
                cache.comp = comp
                cache.table.flags.writeable = False
            return cache.table[: n + 1]

    def gamma(self, n: int) -> float:
        return float(self.gamma_table(n)[n])

    def window(self, n: int, t: float, cap: int = 20_000_000) -> int:
        """Largest ``k >= n`` with ``gamma_k - gamma_n <= t``."""
        if n < 0 or not t > 0:
            raise ScheduleError("window needs n >= 0 and t > 0")
        limit = cap if self.horizon is None else min(cap, self.horizon)
        size = max(2 * n + 64, 1024)
        while True:
            size = min(size, limit)
            table = self.gamma_table(size)
            g0 = table[n]
            if table[-1] - g0 > t:
                break
            if size >= limit:
                raise WindowCapExceeded(
                    f"gamma_k - gamma_{n} stays <= {t} up to index {limit}")
            size *= 2
        k = int(np.searchsorted(table, g0 + t, side="right")) - 1
        k = max(k, n)
        # searchsorted tests gamma_k <= gamma_n + t; the contract is on the difference
        while k > n and table[k] - g0 > t:
            k -= 1
        while table[k + 1] - g0 <= t:
            k += 1
        return k


def gamma(schedule: StepSchedule, n: int) -> float:
    return schedule.gamma(n)


def window(schedule: StepSchedule, n: int, t: float) -> int:
    return schedule.window(n, t)


def windows(table: np.ndarray, ns: np.ndarray, t: float) -> np.ndarray:
    """Vectorised window over a precomputed gamma table.

    Entries whose window would reach past the table end are returned as -1.
    """
    ns = np.asarray(ns, dtype=np.int64)
    g0 = table[ns]
    k = np.searchsorted(table, g0 + t, side="right") - 1
    k = np.maximum(k, ns)
    out = np.empty_like(ns)
    last = table.shape[0] - 1
    for j in range(ns.shape[0]):
        kj, n = int(k[j]), int(ns[j])
        while kj > n and table[kj] - g0[j] > t:
            kj -= 1
        while kj < last and table[kj + 1] - g0[j] <= t:
            kj += 1
        out[j] = kj if kj < last else -1
    return out


def r_upper_bound(a: float) -> float:
    """Supremum of admissible ``r`` for ``alpha_n ~ n^-a``; ``inf`` at ``a = 1``.

    Evaluated in exact rational arithmetic on the decimal form of ``a`` so that
    e.g. ``a = 0.8`` gives exactly 1.5.
    """
    fa = Fraction(repr(float(a)))
    if fa == 1:
        return math.inf
    return float((fa - Fraction(1, 2)) / (1 - fa))


@dataclass
class ScheduleValidation:
    admissible: bool
    reasons: list[str]
    robbins_monro: bool | None = None
    r_interval: tuple[float, float] | None = None
    r_ok: bool | None = None
    checkpoints: list[int] = field(default_factory=list)
    partial_sums: list[float] = field(default_factory=list)
    trend: str = "not computed"
    decade_ratio: float | None = None
    step_inverse_sup: float | None = None

    def summary(self) -> str:
        lines = [f"admissible: {self.admissible}"]
        lines += [f"  reason: {r}" for r in self.reasons]
        if self.r_interval is not None:
            lo, hi = self.r_interval
            lines.append(f"r interval: ({lo:g}, {hi:g})")
        if self.robbins_monro is not None:
            lines.append(f"Robbins-Monro (alpha_n -> 0, sum alpha_n = inf): {self.robbins_monro}")
        if self.partial_sums:
            lines.append(f"sum alpha_n^2 gamma_n^(2r) trend: {self.trend}"
                         f" (decade ratio {self.decade_ratio})")
            for n, s in zip(self.checkpoints, self.partial_sums):
                lines.append(f"  n={n:>10d}  partial={s:.6g}")
        if self.step_inverse_sup is not None:
            lines.append(f"sup |1/alpha_(n+1) - 1/alpha_n| over horizon: {self.step_inverse_sup:.6g}")
        return "\n".join(lines)


def _classify(partials: np.ndarray) -> tuple[str, float | None]:
    inc = np.diff(partials)
    if inc.shape[0] < 2 or inc[-2] <= 0:
        return "inconclusive", None
    ratio = float(inc[-1] / inc[-2])
    if ratio < 0.95:
        return "converging", ratio
    if ratio > 1.05:
        return "diverging", ratio
    return "inconclusive", ratio


def weighted_partial_sums(schedule: StepSchedule, horizon: int, step_power: float,
                          gamma_power: float) -> tuple[list[int], np.ndarray]:
    """Partial sums of ``alpha_n**step_power * gamma_n**gamma_power`` at decades."""
    table = schedule.gamma_table(horizon)
    terms = schedule.alphas(0, horizon) ** step_power * table[:horizon] ** gamma_power
    cums = np.cumsum(terms)
    checkpoints = [10 ** k for k in range(1, 20) if 10 ** k <= horizon]
    if not checkpoints or checkpoints[-1] != horizon:
        checkpoints.append(horizon)
    return checkpoints, cums[np.asarray(checkpoints) - 1]


def validate_schedule(schedule: StepSchedule, horizon: int = 1_000_000) -> ScheduleValidation:
    """Check a schedule against the step-size and noise-weighting conditions."""
    reasons: list[str] = []
    rep = ScheduleValidation(admissible=True, reasons=reasons)
    r = schedule.r
    if schedule.kind == "power_law":
        a = schedule.a
        if not 0.75 < a <= 1.0:
            rep.admissible = False
            reasons.append(f"exponent a={a:g} outside (3/4, 1]")
            return rep
        # alpha_n -> 0 and sum alpha_n = inf hold for every a in (0, 1]
        rep.robbins_monro = True
        rep.r_interval = (1.0, r_upper_bound(a))
    else:
        horizon = min(horizon, schedule.horizon)
        al = np.asarray(schedule.steps)
        rep.robbins_monro = None
        reasons.append("explicit schedule: Robbins-Monro conditions not decidable from a finite list")
        if al.shape[0] > 1:
            rep.step_inverse_sup = float(np.max(np.abs(np.diff(1.0 / al))))
        rep.r_interval = None
    if r is None:
        rep.r_ok = None
        reasons.append("r not set")
    else:
        if rep.r_interval is not None:
            lo, hi = rep.r_interval
            rep.r_ok = lo < r < hi
        else:
            rep.r_ok = r > 1
        if not rep.r_ok:
            rep.admissible = False
            reasons.append(f"r={r:g} outside admissible interval")
        cps, partial = weighted_partial_sums(schedule, horizon, 2.0, 2.0 * r)
        rep.checkpoints = cps
        rep.partial_sums = [float(v) for v in partial]
        rep.trend, rep.decade_ratio = _classify(partial)
    if schedule.kind == "power_law":
        al = schedule.alphas(0, min(horizon, 1_000_000) + 1)
        rep.step_inverse_sup = float(np.max(np.abs(np.diff(1.0 / al))))
    return rep


def paired_step_exponent(r: float) -> float:
    """Exponent ``s = (2 + r) / (2 + 2r)`` paired with the noise exponent ``r``."""
    if not r > 0:
        raise ValueError("r must be positive")
    return (2.0 + r) / (2.0 + 2.0 * r)


def paired_partial_sums(schedule: StepSchedule, r: float, horizon: int = 1_000_000):
    """Decade partial sums of ``alpha_n^(1+s) gamma_n^r`` and their trend."""
    s = paired_step_exponent(r)
    if schedule.horizon is not None:
        horizon = min(horizon, schedule.horizon)
    cps, partial = weighted_partial_sums(schedule, horizon, 1.0 + s, r)
    trend, ratio = _classify(partial)
    return cps, partial, trend
