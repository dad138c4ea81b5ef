"""Structured node-centred grid on an axis-aligned box and the discrete
operators, quadratures and norms used everywhere else.

Fields are plain numpy arrays:

* scalar field: shape ``grid.shape`` = ``(nx + 1, ny + 1, nz + 1)``
* vector field: shape ``(3, *grid.shape)``
* tensor field: shape ``(3, 3, *grid.shape)``, ``T[i, j]`` the (i, j) entry

Axis 0 of a scalar field is x, axis 1 is y, axis 2 is z.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

MIN_CELLS = 4


@dataclass(frozen=True)
class Grid:
    """Box ``[0, Lx] x [0, Ly] x [0, Lz]`` with ``cells`` intervals per axis."""

    extents: tuple[float, float, float]
    cells: tuple[int, int, int]
    spacing: tuple[float, float, float] = field(init=False)

    def __post_init__(self):
        extents = tuple(float(e) for e in self.extents)
        cells = tuple(int(c) for c in self.cells)
        if len(extents) != 3 or len(cells) != 3:
            raise ValueError("extents and cells must have three entries")
        if any(not np.isfinite(e) or e <= 0 for e in extents):
            raise ValueError(f"extents must be positive, got {extents}")
        if any(c < MIN_CELLS for c in cells):
            raise ValueError(f"need at least {MIN_CELLS} cells per axis, got {cells}")
        object.__setattr__(self, "extents", extents)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "spacing", tuple(e / c for e, c in zip(extents, cells)))

    @classmethod
    def cube(cls, n: int, length: float = 1.0) -> "Grid":
        return cls((length, length, length), (n, n, n))

    @property
    def shape(self) -> tuple[int, int, int]:
        return tuple(c + 1 for c in self.cells)

    @property
    def num_nodes(self) -> int:
        return int(np.prod(self.shape))

    @property
    def volume(self) -> float:
        return float(np.prod(self.extents))

    @property
    def h_min(self) -> float:
        return min(self.spacing)

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(0.0, e, c + 1) for e, c in zip(self.extents, self.cells)]

    def coordinates(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Nodal coordinate arrays ``(X, Y, Z)`` of shape ``self.shape``."""
        return tuple(np.meshgrid(*self.axes(), indexing="ij"))

    def evaluate(self, func) -> np.ndarray:
        """Sample ``func(x, y, z)`` at every node (broadcast to full shape)."""
        X, Y, Z = self.coordinates()
        out = np.asarray(func(X, Y, Z), dtype=float)
        if out.ndim >= 3 and out.shape[-3:] == self.shape:
            return out
        return np.broadcast_to(out, self.shape).copy()

    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[0, :, :] = mask[-1, :, :] = True
        mask[:, 0, :] = mask[:, -1, :] = True
        mask[:, :, 0] = mask[:, :, -1] = True
        return mask

    def quadrature_weights(self) -> np.ndarray:
        """Trapezoidal volume weights; these are also the dual-cell volumes."""
        w1 = []
        for h, c in zip(self.spacing, self.cells):
            w = np.full(c + 1, h)
            w[0] = w[-1] = 0.5 * h
            w1.append(w)
        return np.einsum("i,j,k->ijk", *w1)

    def faces(self):
        """Yield ``(axis, side, index)`` for the six faces; ``side`` is 0 or -1.

        ``index`` selects the face from a scalar field, and the face normal is
        ``-e_axis`` for side 0 and ``+e_axis`` for side -1.
        """
        for axis in range(3):
            for side in (0, -1):
                idx = [slice(None)] * 3
                idx[axis] = side
                yield axis, side, tuple(idx)

    def check_scalar(self, f, name: str = "field") -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != self.shape:
            raise ValueError(f"{name} has shape {f.shape}, grid expects {self.shape}")
        return f

    def check_vector(self, v, name: str = "field") -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (3, *self.shape):
            raise ValueError(f"{name} has shape {v.shape}, grid expects {(3, *self.shape)}")
        return v


# ---------------------------------------------------------------- operators


def partial(f: np.ndarray, grid: Grid, axis: int) -> np.ndarray:
    """First derivative along ``axis``: central inside, one-sided 2nd order at walls."""
    return np.gradient(f, grid.spacing[axis], axis=axis, edge_order=2)


def second_partial(f: np.ndarray, grid: Grid, axis: int) -> np.ndarray:
    """Pure second derivative along ``axis`` with 2nd-order one-sided wall stencils."""
    h2 = grid.spacing[axis] ** 2
    f = np.moveaxis(np.asarray(f, dtype=float), axis, 0)
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / h2
    out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2
    out[-1] = (2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]) / h2
    return np.moveaxis(out, 0, axis)


def mixed_partial(f: np.ndarray, grid: Grid, a: int, b: int) -> np.ndarray:
    if a == b:
        return second_partial(f, grid, a)
    return partial(partial(f, grid, b), grid, a)


def gradient(f: np.ndarray, grid: Grid) -> np.ndarray:
    return np.stack([partial(f, grid, d) for d in range(3)])


def divergence(v: np.ndarray, grid: Grid) -> np.ndarray:
    return sum(partial(v[d], grid, d) for d in range(3))


def velocity_gradient(u: np.ndarray, grid: Grid) -> np.ndarray:
    """``G[i, j] = d u_i / d x_j``."""
    return np.stack([gradient(u[i], grid) for i in range(3)])


def strain_rate(u: np.ndarray, grid: Grid) -> np.ndarray:
    G = velocity_gradient(u, grid)
    return 0.5 * (G + G.swapaxes(0, 1))


def laplacian(f: np.ndarray, grid: Grid) -> np.ndarray:
    """7-point Laplacian inside; wall nodes carry one-sided (extrapolated) values."""
    return sum(second_partial(f, grid, d) for d in range(3))


def vector_laplacian(v: np.ndarray, grid: Grid) -> np.ndarray:
    return np.stack([laplacian(v[i], grid) for i in range(3)])


def grad_div(v: np.ndarray, grid: Grid) -> np.ndarray:
    """``grad(div v)`` from second-order second-derivative stencils."""
    return np.stack(
        [sum(mixed_partial(v[j], grid, i, j) for j in range(3)) for i in range(3)]
    )


def conservative_divergence(F: np.ndarray, grid: Grid) -> np.ndarray:
    """Divergence of a flux in summation-by-parts form.

    Interior nodes use central differences. A wall node sees the wall flux
    itself and the flux half-way to its neighbour, i.e. ``(F1 - F0) / h``.
    With the trapezoidal weights this telescopes: the integral of the result
    equals the net outward flux through the walls, which vanishes whenever the
    normal flux does.
    """
    out = np.zeros(grid.shape)
    for d in range(3):
        h = grid.spacing[d]
        f = np.moveaxis(np.asarray(F[d], dtype=float), d, 0)
        g = np.empty_like(f)
        g[1:-1] = (f[2:] - f[:-2]) / (2.0 * h)
        g[0] = (f[1] - f[0]) / h
        g[-1] = (f[-1] - f[-2]) / h
        out += np.moveaxis(g, 0, d)
    return out


# ----------------------------------------------------- quadrature and norms


def integrate(f: np.ndarray, grid: Grid) -> float:
    """Trapezoidal volume integral."""
    return float(np.sum(grid.quadrature_weights() * f))


def face_weights(grid: Grid, axis: int) -> np.ndarray:
    """Trapezoidal weights for the face normal to ``axis``."""
    ws = []
    for d in range(3):
        if d == axis:
            continue
        h, c = grid.spacing[d], grid.cells[d]
        w = np.full(c + 1, h)
        w[0] = w[-1] = 0.5 * h
        ws.append(w)
    return np.outer(ws[0], ws[1])


def boundary_integral(f: np.ndarray, grid: Grid) -> float:
    """Sum of trapezoidal integrals over the six faces."""
    f = np.asarray(f, dtype=float)
    total = 0.0
    for axis, _, idx in grid.faces():
        total += float(np.sum(face_weights(grid, axis) * f[idx]))
    return total


def magnitude(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Pointwise Euclidean magnitude of a scalar, vector or tensor field."""
    f = np.asarray(f, dtype=float)
    if f.shape == grid.shape:
        return np.abs(f)
    return np.sqrt(np.sum(f.reshape(-1, *grid.shape) ** 2, axis=0))


def lp_norm(f: np.ndarray, grid: Grid, p: float = 2.0) -> float:
    """L^p norm over the box; vector/tensor fields use the nodal Euclidean norm."""
    p = float(p)
    if not p >= 1.0:
        raise ValueError(f"L^p norm needs p >= 1, got {p}")
    m = magnitude(f, grid)
    if np.isinf(p):
        return float(np.max(m))
    return integrate(m**p, grid) ** (1.0 / p)


def multi_indices(order: int):
    """All ``(a, b, c)`` with ``a + b + c == order``."""
    for a in range(order + 1):
        for b in range(order + 1 - a):
            yield (a, b, order - a - b)


def _apply_multi_index(f, grid, alpha):
    out = f
    for axis, count in enumerate(alpha):
        for _ in range(count):
            out = partial(out, grid, axis)
    return out


def sobolev_norm(f: np.ndarray, grid: Grid, k: int) -> float:
    """W^{k,2} norm from repeated first differences, ``k`` in 0..3.

    Third differences near walls are built from one-sided stencils and are
    less accurate than interior values.
    """
    if k not in (0, 1, 2, 3):
        raise ValueError(f"sobolev order must be 0..3, got {k}")
    f = np.asarray(f, dtype=float)
    comps = [f] if f.shape == grid.shape else list(f.reshape(-1, *grid.shape))
    total = 0.0
    for comp in comps:
        for order in range(k + 1):
            for alpha in multi_indices(order):
                total += integrate(_apply_multi_index(comp, grid, alpha) ** 2, grid)
    return float(np.sqrt(total))


def trace_sobolev_proxy(f: np.ndarray, grid: Grid, order: int = 3) -> float:
    """Integer-order stand-in for a fractional boundary norm.

    Surface L^2 of the trace plus tangential differences up to ``order`` on
    each face, combined in the l^2 sense.
    """
    f = np.asarray(f, dtype=float)
    comps = [f] if f.shape == grid.shape else list(f.reshape(-1, *grid.shape))
    total = 0.0
    for comp in comps:
        for axis, _, idx in grid.faces():
            face = comp[idx]
            tang = [d for d in range(3) if d != axis]
            hs = [grid.spacing[d] for d in tang]
            w = face_weights(grid, axis)
            for a, b in itertools.product(range(order + 1), repeat=2):
                if a + b > order:
                    continue
                g = face
                for _ in range(a):
                    g = np.gradient(g, hs[0], axis=0, edge_order=2)
                for _ in range(b):
                    g = np.gradient(g, hs[1], axis=1, edge_order=2)
                total += float(np.sum(w * g**2))
    return float(np.sqrt(total))


def trace_max(f: np.ndarray, grid: Grid) -> float:
    """Max of the nodal magnitude over boundary nodes."""
    return float(np.max(magnitude(f, grid)[grid.boundary_mask()]))


def normal_trace_max(v: np.ndarray, grid: Grid) -> float:
    """Largest ``|v . n|`` over wall nodes."""
    worst = 0.0
    for axis, _, idx in grid.faces():
        worst = max(worst, float(np.max(np.abs(v[axis][idx]))))
    return worst
