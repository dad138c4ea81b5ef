"""Matrix-free Dirichlet solvers for the Laplace and Lame operators.

Both operators use compact 2nd-order stencils on interior nodes: the 7-point
Laplacian, and for ``grad div`` the 3-point second difference on the diagonal
plus the 4-point cross stencil off the diagonal. With Dirichlet data the
negated operators are symmetric positive definite on the interior unknowns,
so plain conjugate gradients applies.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .constitutive import PhysParams
from .grid import Grid, normal_trace_max

log = logging.getLogger(__name__)

METHODS = ("conjugate-direction", "damped-relaxation")

_C = slice(1, -1)
_P = slice(2, None)
_M = slice(None, -2)


class EllipticSolveError(RuntimeError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class EllipticSolverConfig:
    tol: float = 1e-10
    max_iter: Optional[int] = None
    method: str = "conjugate-direction"

    def __post_init__(self):
        if not 0.0 < self.tol < 1.0:
            raise ValueError(f"tol must lie in (0, 1), got {self.tol}")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")

    def iterations_for(self, grid: Grid) -> int:
        if self.max_iter is not None:
            return self.max_iter
        return int(round(20 * grid.num_nodes ** (2.0 / 3.0)))


@dataclass
class SolveInfo:
    iterations: int
    residual: float


def _shift(axis: int, offset: slice) -> tuple:
    idx = [_C, _C, _C]
    idx[axis] = offset
    return tuple(idx)


def _d2_interior(f: np.ndarray, grid: Grid, axis: int) -> np.ndarray:
    h2 = grid.spacing[axis] ** 2
    return (f[_shift(axis, _P)] - 2.0 * f[_C, _C, _C] + f[_shift(axis, _M)]) / h2


def _cross_interior(f: np.ndarray, grid: Grid, a: int, b: int) -> np.ndarray:
    def pick(sa, sb):
        idx = [_C, _C, _C]
        idx[a] = sa
        idx[b] = sb
        return f[tuple(idx)]

    denom = 4.0 * grid.spacing[a] * grid.spacing[b]
    return (pick(_P, _P) - pick(_P, _M) - pick(_M, _P) + pick(_M, _M)) / denom


def apply_laplacian(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Discrete Laplacian on interior nodes; wall entries are zero."""
    out = np.zeros(grid.shape)
    out[_C, _C, _C] = sum(_d2_interior(f, grid, d) for d in range(3))
    return out


def apply_lame(u: np.ndarray, grid: Grid, params: PhysParams) -> np.ndarray:
    """``mu Lap u + (eta + mu/3) grad div u`` on interior nodes; wall entries zero."""
    lam = params.lame_second
    out = np.zeros((3, *grid.shape))
    d2 = [[_d2_interior(u[i], grid, d) for d in range(3)] for i in range(3)]
    for i in range(3):
        acc = params.mu * (d2[i][0] + d2[i][1] + d2[i][2]) + lam * d2[i][i]
        for j in range(3):
            if j != i:
                acc = acc + lam * _cross_interior(u[j], grid, i, j)
        out[i][_C, _C, _C] = acc
    return out


def lame_energy(v: np.ndarray, grid: Grid, params: PhysParams) -> float:
    """Energy ``-<L v, v>`` of the discrete Lame operator for zero-trace ``v``.

    Written as a sum of squares over grid edges (plus the cross products of
    central differences), the discrete counterpart of
    ``mu |grad v|^2 + (eta + mu/3) (div v)^2``.
    """
    cell = float(np.prod(grid.spacing))
    lam = params.lame_second
    edge = 0.0
    for i in range(3):
        for d in range(3):
            edge += np.sum(np.diff(v[i], axis=d) ** 2) / grid.spacing[d] ** 2
    diag = sum(np.sum(np.diff(v[d], axis=d) ** 2) / grid.spacing[d] ** 2 for d in range(3))
    central = []
    for d in range(3):
        central.append((v[d][_shift(d, _P)] - v[d][_shift(d, _M)]) / (2.0 * grid.spacing[d]))
    cross = sum(np.sum(central[d] * central[e]) for d in range(3) for e in range(3) if d != e)
    return float(cell * (params.mu * edge + lam * (diag + cross)))


def _interior_only(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    out[..., 1:-1, 1:-1, 1:-1] = x[..., 1:-1, 1:-1, 1:-1]
    return out


def conjugate_gradient(apply_A: Callable, b: np.ndarray, x0: np.ndarray, tol: float,
                       max_iter: int) -> tuple[np.ndarray, SolveInfo]:
    """CG for SPD ``A``; stops when ``|b - A x| <= tol |b|``."""
    bnorm = float(np.sqrt(np.vdot(b, b)))
    if bnorm == 0.0:
        return np.zeros_like(b), SolveInfo(0, 0.0)
    x = x0.copy()
    r = b - apply_A(x)
    p = r.copy()
    rr = float(np.vdot(r, r))
    it = 0
    while np.sqrt(rr) > tol * bnorm and it < max_iter:
        Ap = apply_A(p)
        alpha = rr / float(np.vdot(p, Ap))
        x += alpha * p
        r -= alpha * Ap
        rr_new = float(np.vdot(r, r))
        p = r + (rr_new / rr) * p
        rr = rr_new
        it += 1
    # recompute: the recursive residual drifts from the true one
    r = b - apply_A(x)
    return x, SolveInfo(it, float(np.sqrt(np.vdot(r, r))) / bnorm)


def damped_relaxation(apply_A: Callable, b: np.ndarray, x0: np.ndarray, diag,
                      tol: float, max_iter: int) -> tuple[np.ndarray, SolveInfo]:
    """Damped Jacobi; the damping is set from a power-iteration estimate of the spectrum."""
    bnorm = float(np.sqrt(np.vdot(b, b)))
    if bnorm == 0.0:
        return np.zeros_like(b), SolveInfo(0, 0.0)
    rng = np.random.default_rng(0)
    z = _interior_only(rng.standard_normal(b.shape))
    lam = 1.0
    for _ in range(30):
        z = apply_A(z) / diag
        lam = float(np.sqrt(np.vdot(z, z)))
        z /= lam
    omega = 1.0 / (1.05 * lam)
    x = x0.copy()
    r = b - apply_A(x)
    it = 0
    while np.sqrt(np.vdot(r, r)) > tol * bnorm and it < max_iter:
        x += omega * _interior_only(r / diag)
        r = b - apply_A(x)
        it += 1
    return x, SolveInfo(it, float(np.sqrt(np.vdot(r, r))) / bnorm)


def solve_dirichlet(apply_L: Callable, rhs: np.ndarray, bdata: np.ndarray, grid: Grid,
                    cfg: EllipticSolverConfig, diag=1.0, x0: Optional[np.ndarray] = None,
                    split_mean: bool = False) -> tuple[np.ndarray, SolveInfo]:
    """Solve ``L u = rhs`` inside, ``u = bdata`` on the walls.

    ``-L`` must be SPD on the interior unknowns and only interior entries of
    ``L x`` are used. ``diag`` is the diagonal of ``-L`` (used only by the
    relaxation fallback). With ``split_mean`` (valid when ``L`` annihilates
    constants) the wall mean is split off first, so constant data is
    reproduced exactly.
    """
    wall = grid.boundary_mask()
    if split_mean:
        mean = np.asarray(bdata, dtype=float)[..., wall].mean(axis=-1)
        mean = mean.reshape(mean.shape + (1, 1, 1))
    else:
        mean = np.zeros(np.shape(bdata)[:-3] + (1, 1, 1))
    lift = np.where(wall, bdata - mean, 0.0)
    b = -_interior_only(rhs - apply_L(lift))

    def apply_A(x):
        return -_interior_only(apply_L(x))

    start = np.zeros_like(lift) if x0 is None else _interior_only(x0 - mean)
    max_iter = cfg.iterations_for(grid)
    if cfg.method == "conjugate-direction":
        x, info = conjugate_gradient(apply_A, b, start, cfg.tol, max_iter)
    else:
        x, info = damped_relaxation(apply_A, b, start, diag, cfg.tol, max_iter)
    if info.residual > cfg.tol:
        raise EllipticSolveError(
            f"{cfg.method} did not reach tol {cfg.tol:.1e} in {info.iterations} "
            f"iterations (relative residual {info.residual:.3e})",
            info.residual, info.iterations)
    log.debug("elliptic solve: %d iterations, residual %.2e", info.iterations, info.residual)
    out = lift + x + mean
    out[..., wall] = np.asarray(bdata, dtype=float)[..., wall]
    return out, info


def _poisson_diag(grid: Grid) -> float:
    return 2.0 * sum(1.0 / h**2 for h in grid.spacing)


def _lame_diag(grid: Grid, params: PhysParams) -> np.ndarray:
    base = params.mu * _poisson_diag(grid)
    d = np.array([base + 2.0 * params.lame_second / h**2 for h in grid.spacing])
    return d.reshape(3, 1, 1, 1)


def solve_poisson_dirichlet(rhs: np.ndarray, bdata: np.ndarray, grid: Grid,
                            cfg: EllipticSolverConfig = EllipticSolverConfig(),
                            x0: Optional[np.ndarray] = None) -> np.ndarray:
    """Solve ``Lap u = rhs`` with ``u = bdata`` on the walls.

    Only the wall entries of ``bdata`` are read.
    """
    rhs = grid.check_scalar(rhs, "rhs")
    bdata = grid.check_scalar(bdata, "bdata")
    u, _ = solve_dirichlet(lambda f: apply_laplacian(f, grid), rhs, bdata, grid, cfg,
                           diag=_poisson_diag(grid), x0=x0, split_mean=True)
    return u


def solve_lame_dirichlet(rhs: np.ndarray, bdata: np.ndarray, grid: Grid, params: PhysParams,
                         cfg: EllipticSolverConfig = EllipticSolverConfig(),
                         x0: Optional[np.ndarray] = None) -> np.ndarray:
    """Solve ``div S(D w) = rhs`` with ``w = bdata`` on the walls."""
    rhs = grid.check_vector(rhs, "rhs")
    bdata = grid.check_vector(bdata, "bdata")
    w, _ = solve_dirichlet(lambda f: apply_lame(f, grid, params), rhs, bdata, grid, cfg,
                           diag=_lame_diag(grid, params), x0=x0, split_mean=True)
    return w


def extend_boundary_data(theta_B: np.ndarray, u_B: np.ndarray, grid: Grid, params: PhysParams,
                         cfg: EllipticSolverConfig = EllipticSolverConfig(),
                         normal_tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Harmonic extension of the wall temperature and Lame-harmonic extension
    of the wall velocity."""
    u_B = grid.check_vector(u_B, "u_B")
    worst = normal_trace_max(u_B, grid)
    if worst > normal_tol:
        raise ValueError(f"u_B has normal component {worst:.3e} on the walls (must vanish)")
    theta_ext = solve_poisson_dirichlet(np.zeros(grid.shape), theta_B, grid, cfg)
    u_ext = solve_lame_dirichlet(np.zeros((3, *grid.shape)), u_B, grid, params, cfg)
    return theta_ext, u_ext
