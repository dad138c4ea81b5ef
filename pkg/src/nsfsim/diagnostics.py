"""Functionals of the conditional-regularity estimate chain, evaluated on
state snapshots.

Time derivatives are backward differences between two snapshots. The
right-hand side of the ballistic energy balance is averaged over both
snapshots, which makes the balance residual second order in the step.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .constitutive import PhysParams, dissipation_density, entropy, viscous_stress
from .elliptic import EllipticSolverConfig, solve_lame_dirichlet
from .grid import (Grid, gradient, integrate, laplacian, lp_norm, sobolev_norm, strain_rate,
                   trace_max, trace_sobolev_proxy, velocity_gradient)
from .state import BoundaryData, FluidState, PositivityLost, first_nonpositive

BUDGET_TERMS = ("stress_work", "kinetic_correction", "force_work", "entropy_flux",
                "temperature_gradient")


def _dot(a, b):
    return np.einsum("i...,i...->...", a, b)


def _same_grid(a, b):
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"snapshot shapes differ: {a.shape} vs {b.shape}")


def material_derivative(g_now, g_prev, u, dt: float, grid: Grid) -> np.ndarray:
    """``(g_now - g_prev) / dt + (u . grad) g_now`` for scalar or vector ``g``."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    _same_grid(g_now, g_prev)
    g_now = np.asarray(g_now, dtype=float)
    rate = (g_now - np.asarray(g_prev, dtype=float)) / dt
    if g_now.shape == grid.shape:
        return rate + _dot(u, gradient(g_now, grid))
    grid.check_vector(g_now)
    return rate + np.einsum("j...,ij...->i...", u, velocity_gradient(g_now, grid))


# --------------------------------------------------------- ballistic energy


@dataclass
class BudgetRecord:
    energy: float
    energy_prev: float
    energy_rate: float
    dissipation: float
    terms: dict
    residual: float


def _require_positive_state(state: FluidState):
    for name in ("rho", "theta"):
        hit = first_nonpositive(getattr(state, name))
        if hit is not None:
            raise PositivityLost(name, hit[0], hit[1], state.time)


def ballistic_energy(state: FluidState, bdata: BoundaryData, params: PhysParams) -> float:
    rho, theta, u = state.rho, state.theta, state.u
    rel = u - bdata.u_ext
    density = (0.5 * rho * _dot(rel, rel) + params.cv * rho * theta
               - bdata.theta_ext * rho * entropy(rho, theta, params))
    return integrate(density, state.grid)


def _budget_rhs(state: FluidState, bdata: BoundaryData, params: PhysParams):
    """Dissipation integral and the five balance terms at one snapshot."""
    g = state.grid
    rho, theta, u = state.rho, state.theta, state.u
    ub, tb = bdata.u_ext, bdata.theta_ext
    D = strain_rate(u, g)
    grad_theta = gradient(theta, g)
    dissipation = integrate(
        tb / theta * (dissipation_density(D, params)
                      + params.kappa * _dot(grad_theta, grad_theta) / theta), g)
    Db = strain_rate(ub, g)
    flux = np.einsum("i...,j...->ij...", rho * u, u) - viscous_stress(D, params)
    p = rho * theta
    work = np.einsum("ij...,ij...->...", flux, Db) + p * np.trace(Db, axis1=0, axis2=1)
    grad_tb = gradient(tb, g)
    terms = {
        "stress_work": -integrate(work, g),
        "kinetic_correction": 0.5 * integrate(rho * _dot(u, gradient(_dot(ub, ub), g)), g),
        "force_work": integrate(rho * _dot(u - ub, bdata.f), g),
        "entropy_flux": -integrate(rho * entropy(rho, theta, params) * _dot(u, grad_tb), g),
        "temperature_gradient": params.kappa * integrate(_dot(grad_theta, grad_tb) / theta, g),
    }
    return dissipation, terms


def ballistic_energy_budget(now: FluidState, prev: FluidState, bdata: BoundaryData,
                            params: PhysParams, dt: float) -> BudgetRecord:
    """Discrete ballistic energy balance over one interval.

    ``residual = dE/dt + dissipation - sum(terms)``, with the dissipation and
    the terms averaged over the two snapshots.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    _require_positive_state(now)
    _require_positive_state(prev)
    e_now = ballistic_energy(now, bdata, params)
    e_prev = ballistic_energy(prev, bdata, params)
    d_now, t_now = _budget_rhs(now, bdata, params)
    d_prev, t_prev = _budget_rhs(prev, bdata, params)
    dissipation = 0.5 * (d_now + d_prev)
    terms = {k: 0.5 * (t_now[k] + t_prev[k]) for k in BUDGET_TERMS}
    rate = (e_now - e_prev) / dt
    residual = rate + dissipation - sum(terms.values())
    return BudgetRecord(e_now, e_prev, rate, dissipation, terms, residual)


# ------------------------------------------------------ decomposition, GN


@dataclass
class Decomposition:
    v: np.ndarray
    w: np.ndarray
    mismatch: float


def decompose_velocity(state: FluidState, Dt_u: np.ndarray, bdata: BoundaryData,
                       params: PhysParams,
                       cfg: EllipticSolverConfig = EllipticSolverConfig()) -> Decomposition:
    """Split ``u`` into a pressure part ``v`` (zero trace) and an inertia/force
    part ``w`` (trace ``u_B``) by two Lame solves."""
    g = state.grid
    p = state.rho * state.theta
    zero = np.zeros((3, *g.shape))
    v = solve_lame_dirichlet(gradient(p, g), zero, g, params, cfg)
    w = solve_lame_dirichlet(state.rho * (Dt_u - bdata.f), bdata.u_B, g, params, cfg)
    return Decomposition(v, w, lp_norm(state.u - (v + w), g, 2))


def gn_check(U: np.ndarray, grid: Grid, trace_tol: float = 1e-12) -> tuple[float, float, float]:
    """Both sides of ``|grad U|_{L4}^2 <= |U|_inf |Lap U|_{L2}`` for zero-trace ``U``.

    Returns ``(lhs, rhs, rhs - lhs)``.
    """
    U = grid.check_scalar(U, "U")
    tr = trace_max(U, grid)
    if tr > trace_tol:
        raise ValueError(f"U must vanish on the walls, trace max is {tr:.3e}")
    lhs = lp_norm(gradient(U, grid), grid, 4) ** 2
    rhs = lp_norm(U, grid, np.inf) * lp_norm(laplacian(U, grid), grid, 2)
    return lhs, rhs, rhs - lhs


# ------------------------------------------------------------- data size


@dataclass
class DataQuantity:
    value: float
    terms: dict
    notes: tuple = (
        "boundary norms use the integer-order trace proxy (surface L2 plus "
        "tangential differences up to order 3)",
        "third differences next to the walls use one-sided stencils",
    )


def compute_D0(state0: FluidState, bdata: BoundaryData) -> DataQuantity:
    g = state0.grid
    wall = g.boundary_mask()
    mins = {"rho0": float(np.min(state0.rho)), "theta0": float(np.min(state0.theta)),
            "theta_B": float(np.min(bdata.theta_B[wall]))}
    for k, m in mins.items():
        if not m > 0:
            raise ValueError(f"min {k} = {m!r} is not positive")
    stacked = np.concatenate([state0.rho[None], state0.theta[None], state0.u])
    terms = {
        "data_W32": sobolev_norm(stacked, g, 3),
        "inv_min_rho0": 1.0 / mins["rho0"],
        "inv_min_theta0": 1.0 / mins["theta0"],
        "inv_min_theta_B": 1.0 / mins["theta_B"],
        "theta_B_trace": trace_sobolev_proxy(bdata.theta_B, g),
        "u_B_trace": trace_sobolev_proxy(bdata.u_B, g),
        "f_W22": sobolev_norm(bdata.f, g, 2),
    }
    return DataQuantity(max(terms.values()), terms)


# ---------------------------------------------------------------- records


@dataclass(frozen=True)
class DiagnosticsRecord:
    time: float
    sup_rho: float
    sup_theta: float
    sup_speed: float
    min_rho: float
    min_theta: float
    mass: float
    ballistic_energy: float
    energy_rate: float
    dissipation: float
    stress_work: float
    kinetic_correction: float
    force_work: float
    entropy_flux: float
    temperature_gradient: float
    budget_residual: float
    grad_u_L2: float
    grad_u_L4: float
    grad_theta_L2: float
    rho_Dt_u_L2: float
    rho_Dt_theta_L2: float
    decomposition_mismatch: float
    gn_margin: float

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @property
    def budget_terms(self) -> tuple:
        return tuple(getattr(self, k) for k in BUDGET_TERMS)

    @property
    def sup_triple(self) -> tuple:
        return (self.sup_rho, self.sup_theta, self.sup_speed)

    def as_dict(self) -> dict:
        return asdict(self)


def record(now: FluidState, prev: FluidState, bdata: BoundaryData, params: PhysParams,
           dt: float, solver: EllipticSolverConfig = EllipticSolverConfig(),
           decompose: bool = True) -> DiagnosticsRecord:
    """One diagnostics sample for the interval ``(prev, now]``.

    With ``decompose=False`` the two Lame solves are skipped and the
    decomposition mismatch and GN margin are reported as NaN.
    """
    g = now.grid
    budget = ballistic_energy_budget(now, prev, bdata, params, dt)
    Dt_u = material_derivative(now.u, prev.u, now.u, dt, g)
    Dt_theta = material_derivative(now.theta, prev.theta, now.u, dt, g)
    if decompose:
        dec = decompose_velocity(now, Dt_u, bdata, params, solver)
        zero_trace = dec.w - bdata.u_ext
        zero_trace[:, g.boundary_mask()] = 0.0
        mismatch = dec.mismatch
        gn_margin = min(gn_check(zero_trace[i], g)[2] for i in range(3))
    else:
        mismatch = gn_margin = math.nan
    G = velocity_gradient(now.u, g)
    return DiagnosticsRecord(
        time=now.time,
        sup_rho=float(np.max(now.rho)),
        sup_theta=float(np.max(now.theta)),
        sup_speed=lp_norm(now.u, g, np.inf),
        min_rho=float(np.min(now.rho)),
        min_theta=float(np.min(now.theta)),
        mass=integrate(now.rho, g),
        ballistic_energy=budget.energy,
        energy_rate=budget.energy_rate,
        dissipation=budget.dissipation,
        budget_residual=budget.residual,
        grad_u_L2=lp_norm(G, g, 2),
        grad_u_L4=lp_norm(G, g, 4),
        grad_theta_L2=lp_norm(gradient(now.theta, g), g, 2),
        rho_Dt_u_L2=math.sqrt(integrate(now.rho * _dot(Dt_u, Dt_u), g)),
        rho_Dt_theta_L2=math.sqrt(integrate(now.rho * Dt_theta**2, g)),
        decomposition_mismatch=mismatch,
        gn_margin=gn_margin,
        **budget.terms,
    )
