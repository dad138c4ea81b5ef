"""Fluid state snapshots and boundary data."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .constitutive import PhysParams, PositivityError
from .elliptic import EllipticSolverConfig, extend_boundary_data
from .grid import Grid, normal_trace_max


class PositivityLost(PositivityError):
    """Density or temperature dropped to a nonpositive (or non-finite) value."""

    def __init__(self, field_name: str, node: tuple, value: float, time: float):
        super().__init__(
            f"positivity lost: {field_name} = {value!r} at node {node}, t = {time!r}")
        self.field_name = field_name
        self.node = node
        self.value = value
        self.time = time


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def first_nonpositive(f: np.ndarray):
    """Index and value of the first node that is not strictly positive, else None."""
    bad = ~(f > 0)
    if not np.any(bad):
        return None
    node = tuple(int(i) for i in np.argwhere(bad)[0])
    return node, float(f[node])


@dataclass(frozen=True)
class FluidState:
    """Density, temperature and velocity at one instant (read-only arrays)."""

    grid: Grid
    time: float
    rho: np.ndarray
    theta: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "time", float(self.time))
        object.__setattr__(self, "rho", _frozen(self.grid.check_scalar(self.rho, "rho")))
        object.__setattr__(self, "theta", _frozen(self.grid.check_scalar(self.theta, "theta")))
        object.__setattr__(self, "u", _frozen(self.grid.check_vector(self.u, "u")))

    def assert_positive(self):
        for name in ("rho", "theta"):
            hit = first_nonpositive(getattr(self, name))
            if hit is not None:
                raise PositivityLost(name, hit[0], hit[1], self.time)
        if not np.all(np.isfinite(self.u)):
            node = tuple(int(i) for i in np.argwhere(~np.isfinite(self.u))[0])
            raise PositivityLost("u", node, float(self.u[node]), self.time)

    def replace(self, **changes) -> "FluidState":
        data = dict(grid=self.grid, time=self.time, rho=self.rho, theta=self.theta, u=self.u)
        data.update(changes)
        return FluidState(**data)


@dataclass(frozen=True)
class BoundaryData:
    """Wall temperature and velocity, body force, and their interior extensions.

    ``theta_B`` and ``u_B`` are full-grid arrays of which only the wall nodes
    are meaningful. The extensions are computed once by :meth:`create`.
    """

    grid: Grid
    theta_B: np.ndarray
    u_B: np.ndarray
    f: np.ndarray
    theta_ext: np.ndarray
    u_ext: np.ndarray
    normal_tol: float = 1e-12

    def __post_init__(self):
        g = self.grid
        for name in ("theta_B", "theta_ext"):
            object.__setattr__(self, name, _frozen(g.check_scalar(getattr(self, name), name)))
        for name in ("u_B", "f", "u_ext"):
            object.__setattr__(self, name, _frozen(g.check_vector(getattr(self, name), name)))
        wall = g.boundary_mask()
        tmin = float(np.min(self.theta_B[wall]))
        if not tmin > 0:
            raise ValueError(f"theta_B must be positive on the walls, min is {tmin!r}")
        worst = normal_trace_max(self.u_B, g)
        if worst > self.normal_tol:
            raise ValueError(f"u_B has normal component {worst:.3e} on the walls (must vanish)")

    @classmethod
    def create(cls, grid: Grid, theta_B, u_B=None, f=None,
               params: Optional[PhysParams] = None,
               solver: EllipticSolverConfig = EllipticSolverConfig()) -> "BoundaryData":
        params = params or PhysParams()
        theta_B = np.broadcast_to(np.asarray(theta_B, dtype=float), grid.shape).copy()
        u_B = np.zeros((3, *grid.shape)) if u_B is None else np.asarray(u_B, dtype=float)
        f = np.zeros((3, *grid.shape)) if f is None else np.asarray(f, dtype=float)
        wall = grid.boundary_mask()
        theta_B = np.where(wall, theta_B, theta_B[wall].mean())
        u_B = np.where(wall, u_B, 0.0)
        theta_ext, u_ext = extend_boundary_data(theta_B, u_B, grid, params, solver)
        return cls(grid, theta_B, u_B, f, theta_ext, u_ext)

    @property
    def wall(self) -> np.ndarray:
        return self.grid.boundary_mask()
