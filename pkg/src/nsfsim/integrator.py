"""Time stepping of the compressible Navier-Stokes-Fourier system.

Conserved variables are ``(rho, rho u, rho cv theta)``; the internal energy
balance is evolved directly. Density lives on every node and is advanced with
the summation-by-parts divergence so that the trapezoidal mass is conserved to
rounding. Velocity and temperature are advanced on interior nodes only and
their wall values are re-imposed after every stage.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .constitutive import PhysParams, dissipation_density
from .elliptic import (EllipticSolverConfig, _lame_diag, _poisson_diag, apply_lame,
                       apply_laplacian, solve_dirichlet)
from .grid import (Grid, conservative_divergence, divergence, gradient, grad_div, laplacian,
                   normal_trace_max, sobolev_norm, trace_sobolev_proxy, velocity_gradient,
                   vector_laplacian)
from .state import BoundaryData, FluidState, PositivityLost, first_nonpositive

log = logging.getLogger(__name__)

SCHEMES = ("explicit-rk2", "semi-implicit-theta")

Source = Callable[[float], tuple]


class StabilityBoundExceeded(ValueError):
    def __init__(self, dt: float, bound: float, time: float):
        super().__init__(
            f"time step dt = {dt!r} exceeds the stability bound {bound!r} at t = {time!r}")
        self.dt = dt
        self.bound = bound
        self.time = time


class DataCheckFailed(ValueError):
    """Initial/boundary data fail the data-class or compatibility checks."""


@dataclass(frozen=True)
class StepConfig:
    dt: float
    cfl_safety: float = 0.25
    scheme: str = "explicit-rk2"
    implicit_weight: float = 0.5
    check_stability: bool = True
    solver: EllipticSolverConfig = EllipticSolverConfig(tol=1e-10)

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ValueError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety!r}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if not 0.0 < self.implicit_weight <= 1.0:
            raise ValueError("implicit_weight must lie in (0, 1]")


def stability_bound(state: FluidState, params: PhysParams, scheme: str = "explicit-rk2") -> float:
    """Acoustic plus diffusive CFL limit (diffusive part dropped when implicit)."""
    h = state.grid.h_min
    speed = float(np.max(np.sqrt(np.sum(state.u**2, axis=0))))
    gamma_proxy = math.sqrt(1.0 + 1.0 / params.cv)
    acoustic = h / (speed + math.sqrt(float(np.max(state.theta))) * gamma_proxy)
    if scheme == "semi-implicit-theta":
        return acoustic
    nu = max(params.kappa / params.cv, 2.0 * params.mu + params.eta)
    diffusive = h**2 * float(np.min(state.rho)) / (2.0 * nu)
    return min(acoustic, diffusive)


# ------------------------------------------------------------------ checks


@dataclass
class DataClassReport:
    min_rho0: float
    min_theta0: float
    min_theta_B: float
    norms: dict
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def lines(self) -> list[str]:
        out = [f"min_rho0 = {self.min_rho0!r}", f"min_theta0 = {self.min_theta0!r}",
               f"min_theta_B = {self.min_theta_B!r}"]
        out += [f"norm {k} = {v!r}" for k, v in self.norms.items()]
        out += [f"FAIL {msg}" for msg in self.failures]
        out.append("data class: " + ("pass" if self.passed else "fail"))
        return out


def check_data_class(state0: FluidState, bdata: BoundaryData) -> DataClassReport:
    """Positivity of the data and finiteness of the norms the data class requires.

    Boundary norms use the integer-order trace proxy.
    """
    g = state0.grid
    wall = g.boundary_mask()
    norms = {
        "rho0_W32": sobolev_norm(state0.rho, g, 3),
        "theta0_W32": sobolev_norm(state0.theta, g, 3),
        "u0_W32": sobolev_norm(state0.u, g, 3),
        "theta_B_trace_proxy": trace_sobolev_proxy(bdata.theta_B, g),
        "u_B_trace_proxy": trace_sobolev_proxy(bdata.u_B, g),
        "f_W22": sobolev_norm(bdata.f, g, 2),
    }
    rep = DataClassReport(float(np.min(state0.rho)), float(np.min(state0.theta)),
                          float(np.min(bdata.theta_B[wall])), norms)
    if not rep.min_rho0 > 0:
        rep.failures.append("rho0 not bounded below by a positive constant")
    if not rep.min_theta0 > 0:
        rep.failures.append("theta0 not bounded below by a positive constant")
    if not rep.min_theta_B > 0:
        rep.failures.append("theta_B not bounded below by a positive constant")
    for k, v in norms.items():
        if not math.isfinite(v):
            rep.failures.append(f"{k} is not finite")
    normal = normal_trace_max(bdata.u_B, g)
    if normal > bdata.normal_tol:
        rep.failures.append(f"u_B has normal component {normal:.3e}")
    return rep


@dataclass
class CompatibilityReport:
    trace_theta: float
    trace_u: float
    momentum: float
    energy: float

    def residuals(self) -> dict:
        return {"trace_theta": self.trace_theta, "trace_u": self.trace_u,
                "momentum": self.momentum, "energy": self.energy}

    def passed(self, tol: float) -> bool:
        return all(v <= tol for v in self.residuals().values())

    def lines(self, tol: Optional[float] = None) -> list[str]:
        out = [f"residual {k} = {v!r}" for k, v in self.residuals().items()]
        if tol is not None:
            out.append(f"compatibility (tol {tol!r}): " + ("pass" if self.passed(tol) else "fail"))
        return out


def lame_divergence(u: np.ndarray, grid: Grid, params: PhysParams) -> np.ndarray:
    """``div S(D u)`` on every node from 2nd-order stencils (one-sided at walls)."""
    return params.mu * vector_laplacian(u, grid) + params.lame_second * grad_div(u, grid)


def check_compatibility(state0: FluidState, bdata: BoundaryData,
                        params: PhysParams) -> CompatibilityReport:
    """Wall residuals of the trace, momentum and energy compatibility conditions."""
    g = state0.grid
    wall = g.boundary_mask()
    rho, theta, u = state0.rho, state0.theta, state0.u
    p = rho * theta
    G = velocity_gradient(u, g)
    conv_u = np.einsum("j...,ij...->i...", u, G)
    mom = rho * conv_u + gradient(p, g) - lame_divergence(u, g, params) - rho * bdata.f
    D = 0.5 * (G + G.swapaxes(0, 1))
    div_u = np.trace(G, axis1=0, axis2=1)
    dissip = dissipation_density(D, params)
    energy = (rho * np.einsum("i...,i...->...", u, gradient(theta, g))
              - params.kappa * laplacian(theta, g) - dissip + p * div_u)

    def wall_max(a):
        m = np.abs(a) if a.ndim == 3 else np.sqrt(np.sum(a**2, axis=0))
        return float(np.max(m[wall]))

    return CompatibilityReport(
        trace_theta=wall_max(theta - bdata.theta_B),
        trace_u=wall_max(u - bdata.u_B),
        momentum=wall_max(mom),
        energy=wall_max(energy),
    )


# ---------------------------------------------------------------- stepping


def _central_div_tensor(T: np.ndarray, grid: Grid) -> np.ndarray:
    """``div`` of a tensor ``T[i, j]`` row-wise: ``sum_j d_j T[i, j]``."""
    return np.stack([divergence(T[i], grid) for i in range(3)])


def _explicit_parts(rho, theta, u, bdata, params, grid):
    """Right-hand sides without the implicit-capable diffusion terms."""
    p = rho * theta
    m = rho * u
    drho = -conservative_divergence(m, grid)
    dmom = -_central_div_tensor(np.einsum("i...,j...->ij...", m, u), grid) \
        - gradient(p, grid) + rho * bdata.f
    G = velocity_gradient(u, grid)
    D = 0.5 * (G + G.swapaxes(0, 1))
    div_u = np.trace(G, axis1=0, axis2=1)
    dE = -divergence(params.cv * rho * theta * u, grid) \
        + dissipation_density(D, params) - p * div_u
    return drho, dmom, dE


def _add_source(parts, source, t):
    if source is None:
        return parts
    s_rho, s_mom, s_E = source(t)
    drho, dmom, dE = parts
    return drho + s_rho, dmom + s_mom, dE + s_E


def _primitives(rho, mom, E, bdata, params, time):
    hit = first_nonpositive(rho)
    if hit is not None:
        raise PositivityLost("rho", hit[0], hit[1], time)
    wall = bdata.wall
    u = np.where(wall, bdata.u_B, mom / rho)
    theta = np.where(wall, bdata.theta_B, E / (params.cv * rho))
    hit = first_nonpositive(theta)
    if hit is not None:
        raise PositivityLost("theta", hit[0], hit[1], time)
    if not np.all(np.isfinite(u)):
        node = tuple(int(i) for i in np.argwhere(~np.isfinite(u))[0])
        raise PositivityLost("u", node, float(u[node]), time)
    return theta, u


def _rk2_step(state, bdata, params, dt, source):
    g = state.grid

    def rhs(rho, theta, u, t):
        drho, dmom, dE = _add_source(_explicit_parts(rho, theta, u, bdata, params, g), source, t)
        dmom = dmom + apply_lame(u, g, params)
        dE = dE + params.kappa * apply_laplacian(theta, g)
        return drho, dmom, dE

    t0 = state.time
    rho0, th0, u0 = state.rho, state.theta, state.u
    q0 = (rho0, rho0 * u0, params.cv * rho0 * th0)
    k1 = rhs(rho0, th0, u0, t0)
    q1 = tuple(a + dt * b for a, b in zip(q0, k1))
    th1, u1 = _primitives(*q1, bdata, params, t0 + dt)
    k2 = rhs(q1[0], th1, u1, t0 + dt)
    q2 = tuple(0.5 * a + 0.5 * (b + dt * c) for a, b, c in zip(q0, q1, k2))
    th2, u2 = _primitives(*q2, bdata, params, t0 + dt)
    return q2[0], th2, u2


def _theta_step(state, bdata, params, dt, source, weight, solver):
    """Implicit diffusion (weighted), explicit transport, pressure and heating."""
    g = state.grid
    t0 = state.time
    rho0, th0, u0 = state.rho, state.theta, state.u
    drho, dmom, dE = _add_source(_explicit_parts(rho0, th0, u0, bdata, params, g), source, t0)
    rho1 = rho0 + dt * drho
    hit = first_nonpositive(rho1)
    if hit is not None:
        raise PositivityLost("rho", hit[0], hit[1], t0 + dt)

    mom_rhs = rho0 * u0 + dt * (dmom + (1.0 - weight) * apply_lame(u0, g, params))
    u1, _ = solve_dirichlet(lambda x: dt * weight * apply_lame(x, g, params) - rho1 * x,
                            -mom_rhs, bdata.u_B, g, solver,
                            diag=rho1 + dt * weight * _lame_diag(g, params), x0=u0)
    E_rhs = params.cv * rho0 * th0 + dt * (dE + (1.0 - weight) * params.kappa
                                           * apply_laplacian(th0, g))
    th1, _ = solve_dirichlet(
        lambda x: dt * weight * params.kappa * apply_laplacian(x, g) - params.cv * rho1 * x,
        -E_rhs, bdata.theta_B, g, solver,
        diag=params.cv * rho1 + dt * weight * params.kappa * _poisson_diag(g), x0=th0)
    th1, u1 = _primitives(rho1, rho1 * u1, params.cv * rho1 * th1, bdata, params, t0 + dt)
    return rho1, th1, u1


def step(state: FluidState, bdata: BoundaryData, params: PhysParams, cfg: StepConfig,
         dt: Optional[float] = None, source: Optional[Source] = None) -> FluidState:
    """Advance one step of size ``dt`` (defaults to ``cfg.dt``).

    ``source(t)`` may return extra ``(mass, momentum, energy)`` right-hand
    sides, as used by manufactured-solution tests.
    """
    dt = cfg.dt if dt is None else float(dt)
    if cfg.check_stability:
        bound = cfg.cfl_safety * stability_bound(state, params, cfg.scheme)
        if dt > bound:
            raise StabilityBoundExceeded(dt, bound, state.time)
    if cfg.scheme == "explicit-rk2":
        rho, theta, u = _rk2_step(state, bdata, params, dt, source)
    else:
        rho, theta, u = _theta_step(state, bdata, params, dt, source,
                                    cfg.implicit_weight, cfg.solver)
    new = FluidState(state.grid, state.time + dt, rho, theta, u)
    new.assert_positive()
    return new


# --------------------------------------------------------------------- run


class StopRun(Exception):
    """Raised by a hook to end a run early."""


@dataclass
class RunResult:
    state: FluidState
    records: list
    report: object = None
    stopped_early: bool = False
    steps: int = 0


def run(state0: FluidState, bdata: BoundaryData, params: PhysParams, cfg: StepConfig,
        t_end: float, *, record_every: int = 0, monitor=None, hooks=(),
        source: Optional[Source] = None, override_compat: bool = False,
        compat_tol: float = 1e-6, decompose: bool = True) -> RunResult:
    """Integrate from ``state0.time`` to ``t_end``.

    Every ``record_every`` steps (0 disables) a diagnostics record is built
    from the current/previous snapshot pair and fed to ``monitor``. Each
    ``hook(state, prev, record)`` is called after every step, with
    ``record=None`` on steps without a record. A hook may raise
    :class:`StopRun`.
    The last step is shortened to land on ``t_end``.
    """
    from .diagnostics import record as make_record

    t0 = state0.time
    if not t_end >= t0:
        raise ValueError(f"t_end = {t_end!r} lies before the initial time {t0!r}")
    if t_end == t0:
        return RunResult(state0, [], monitor.report if monitor is not None else None)

    dc = check_data_class(state0, bdata)
    compat = check_compatibility(state0, bdata, params)
    problems = list(dc.failures)
    if not compat.passed(compat_tol):
        problems.append("compatibility residuals above tolerance: " + ", ".join(
            f"{k}={v:.3e}" for k, v in compat.residuals().items() if v > compat_tol))
    if problems:
        if not override_compat or dc.failures:
            raise DataCheckFailed("; ".join(problems))
        log.warning("running despite failed checks: %s", "; ".join(problems))

    if cfg.check_stability:
        bound = cfg.cfl_safety * stability_bound(state0, params, cfg.scheme)
        if cfg.dt > bound:
            raise StabilityBoundExceeded(cfg.dt, bound, t0)

    nsteps = max(1, math.ceil((t_end - t0) / cfg.dt - 1e-9))
    records = []
    state = state0
    stopped = False
    k = 0
    for k in range(1, nsteps + 1):
        target = t_end if k == nsteps else t0 + k * cfg.dt
        dt = target - state.time
        prev = state
        try:
            state = step(state, bdata, params, cfg, dt=dt, source=source)
        except PositivityLost:
            log.error("positivity lost during step %d (t = %r)", k, prev.time)
            raise
        state = state.replace(time=target)
        rec = None
        if record_every and (k % record_every == 0 or k == nsteps):
            rec = make_record(state, prev, bdata, params, dt, solver=cfg.solver,
                              decompose=decompose)
            records.append(rec)
            if monitor is not None:
                monitor.update(rec)
        try:
            for hook in hooks:
                hook(state, prev, rec)
        except StopRun:
            stopped = True
            break
    return RunResult(state, records, monitor.report if monitor is not None else None,
                     stopped, k)
