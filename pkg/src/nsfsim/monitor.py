"""Blow-up monitor: running sup/inf bounds of (rho, theta, |u|) and a
power-law extrapolation of a finite blow-up time.

The power-law family ``m(t) = C (T* - t)^(-gamma)`` is a monitoring
heuristic; the thresholds in :class:`MonitorConfig` are policy, not theory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

REGULAR = "conditionally-regular"
GROWTH = "growth-detected"
BLOWUP = "suspected-blow-up"
POSITIVITY = "positivity-lost"
CLASSES = (REGULAR, GROWTH, BLOWUP, POSITIVITY)

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class MonitorConfig:
    window: int = 50
    growth_factor: float = 4.0
    min_samples: int = 8
    fit_threshold: float = 0.99
    # T* is searched in (t_last, t_last + search_span * window_span]
    search_span: float = 1.0

    def __post_init__(self):
        if not self.window >= self.min_samples >= 4:
            raise ValueError("need window >= min_samples >= 4, got "
                             f"window={self.window}, min_samples={self.min_samples}")
        if not self.growth_factor > 1.0:
            raise ValueError(f"growth_factor must exceed 1, got {self.growth_factor}")
        if not 0.0 < self.fit_threshold <= 1.0:
            raise ValueError("fit_threshold must lie in (0, 1]")
        if not self.search_span > 0:
            raise ValueError("search_span must be positive")


@dataclass(frozen=True)
class PowerLawFit:
    t_star: float
    gamma: float
    log_c: float
    r2: float
    interior: bool


@dataclass(frozen=True)
class RegularityReport:
    horizon: float = -math.inf
    running_sup: tuple = (0.0, 0.0, 0.0)
    running_min: tuple = (math.inf, math.inf)
    classification: str = REGULAR
    estimated_Tstar: Optional[float] = None
    fit_quality: float = 0.0
    gamma: Optional[float] = None
    samples: int = 0

    def lines(self) -> list[str]:
        tstar = "none" if self.estimated_Tstar is None else repr(self.estimated_Tstar)
        gamma = "none" if self.gamma is None else repr(self.gamma)
        return [
            "[regularity-report]",
            f"horizon = {self.horizon!r}",
            "running_sup = " + " ".join(repr(v) for v in self.running_sup),
            "running_min = " + " ".join(repr(v) for v in self.running_min),
            f"classification = {self.classification}",
            f"estimated_Tstar = {tstar}",
            f"fit_quality = {self.fit_quality!r}",
            f"gamma = {gamma}",
            f"samples = {self.samples}",
            "note = power-law extrapolation is a heuristic; thresholds are monitor policy",
        ]

    def to_text(self) -> str:
        return "\n".join(self.lines()) + "\n"


def _loglog_fit(t: np.ndarray, logm: np.ndarray, t_star: float):
    """Least squares of ``log m`` on ``log(T* - t)``; returns slope, intercept, R^2."""
    x = np.log(t_star - t)
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, logm, rcond=None)
    resid = logm - A @ coef
    ss_tot = float(np.sum((logm - logm.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 0.0
    return float(coef[0]), float(coef[1]), r2


def fit_power_law(t: Sequence[float], m: Sequence[float], search_span: float = 1.0,
                  iterations: int = 80) -> PowerLawFit:
    """Fit ``m = C (T* - t)^(-gamma)`` by golden-section search over ``T*``.

    For fixed ``T*`` the fit is linear in log-log coordinates; the search
    minimises the residual over ``log(T* - t_last)``. ``interior`` is False
    when the optimum sits on the far end of the bracket, i.e. the data prefer
    no finite singularity inside the search range.
    """
    t = np.asarray(t, dtype=float)
    logm = np.log(np.asarray(m, dtype=float))
    span = float(t[-1] - t[0])
    if span <= 0:
        raise ValueError("samples must span a positive time interval")
    lo, hi = math.log(1e-6 * span), math.log(search_span * span)

    def sse(s):
        slope, _, r2 = _loglog_fit(t, logm, t[-1] + math.exp(s))
        return 1.0 - r2

    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = sse(c), sse(d)
    for _ in range(iterations):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = sse(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = sse(d)
    s = 0.5 * (a + b)
    t_star = float(t[-1] + math.exp(s))
    slope, intercept, r2 = _loglog_fit(t, logm, t_star)
    interior = s < hi - 1e-3 * (hi - lo)
    return PowerLawFit(t_star, -slope, intercept, max(0.0, r2), interior)


def _channel(history) -> tuple[np.ndarray, np.ndarray]:
    t = np.array([r.time for r in history], dtype=float)
    m = np.array([max(r.sup_rho, r.sup_theta, r.sup_speed) for r in history], dtype=float)
    return t, m


def _extremes(history, start: RegularityReport = RegularityReport()):
    sup = list(start.running_sup)
    low = list(start.running_min)
    for r in history:
        sup = [max(a, b) for a, b in zip(sup, (r.sup_rho, r.sup_theta, r.sup_speed))]
        low = [min(a, b) for a, b in zip(low, (r.min_rho, r.min_theta))]
    return tuple(sup), tuple(low)


def classify(history, cfg: MonitorConfig = MonitorConfig()) -> RegularityReport:
    """Classify a record history (oldest first).

    The fitted channel is the max of the three sup norms over the trailing
    ``cfg.window`` samples. Growth means some channel rose by at least
    ``growth_factor`` over the whole history; a blow-up is suspected when the
    fitted channel grew that much, the power-law fit has R^2 at least
    ``fit_threshold``, ``gamma > 0`` and the optimal ``T*`` is interior.
    """
    history = list(history)
    if len(history) < cfg.min_samples:
        raise ValueError(f"need at least {cfg.min_samples} samples, got {len(history)}")
    times = [r.time for r in history]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("record times must be strictly increasing")
    sup, low = _extremes(history)
    base = RegularityReport(horizon=times[-1], running_sup=sup, running_min=low,
                            samples=len(history))
    if not (low[0] > 0 and low[1] > 0):
        return replace(base, classification=POSITIVITY)

    tail = history[-cfg.window:]
    t, m = _channel(tail)
    grew = False
    for name in ("sup_rho", "sup_theta", "sup_speed"):
        first, last = getattr(history[0], name), getattr(history[-1], name)
        if first > 0 and last >= cfg.growth_factor * first:
            grew = True
    fit = fit_power_law(t, m, cfg.search_span)
    channel_growth = m[-1] / m[0]
    suspected = (channel_growth >= cfg.growth_factor and fit.r2 >= cfg.fit_threshold
                 and fit.gamma > 0 and fit.interior)
    if suspected:
        return replace(base, classification=BLOWUP, estimated_Tstar=fit.t_star,
                       fit_quality=fit.r2, gamma=fit.gamma)
    quality = fit.r2 if fit.interior else 0.0
    return replace(base, classification=GROWTH if grew else REGULAR, fit_quality=quality)


def update(report: RegularityReport, rec, history: list,
           cfg: MonitorConfig = MonitorConfig()) -> RegularityReport:
    """Fold one record into ``report``; ``history`` is appended in place."""
    if rec.time <= report.horizon:
        raise ValueError(f"record time {rec.time!r} does not advance past {report.horizon!r}")
    history.append(rec)
    sup, low = _extremes([rec], report)
    if len(history) >= cfg.min_samples:
        full = classify(history, cfg)
        return full
    cls = POSITIVITY if not (low[0] > 0 and low[1] > 0) else REGULAR
    return RegularityReport(horizon=rec.time, running_sup=sup, running_min=low,
                            classification=cls, samples=len(history))


class RegularityMonitor:
    """Single-owner accumulator around :func:`update`."""

    def __init__(self, cfg: MonitorConfig = MonitorConfig()):
        self.cfg = cfg
        self.history: list = []
        self.report = RegularityReport()

    def update(self, rec) -> RegularityReport:
        self.report = update(self.report, rec, self.history, self.cfg)
        return self.report
