"""Perfect-gas, Newtonian, Fourier constitutive laws (pointwise)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class PositivityError(ValueError):
    """A density or temperature node is not strictly positive."""


@dataclass(frozen=True)
class PhysParams:
    mu: float = 1.0
    eta: float = 0.0
    kappa: float = 1.0
    cv: float = 1.5

    def __post_init__(self):
        checks = (
            ("mu", self.mu > 0, "mu > 0 (shear viscosity)"),
            ("eta", self.eta >= 0, "eta >= 0 (bulk viscosity)"),
            ("kappa", self.kappa > 0, "kappa > 0 (heat conductivity)"),
            ("cv", self.cv > 0, "cv > 0 (specific heat)"),
        )
        for name, ok, rule in checks:
            value = getattr(self, name)
            if not (np.isfinite(value) and ok):
                raise ValueError(f"{name} = {value!r} violates {rule}")

    @property
    def lame_second(self) -> float:
        """Coefficient of ``grad div`` in ``div S(D u)``."""
        return self.eta + self.mu / 3.0


def _require_positive(name: str, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    bad = ~(f > 0)
    if np.any(bad):
        node = tuple(int(i) for i in np.argwhere(bad)[0]) if f.ndim else ()
        raise PositivityError(f"{name} not strictly positive at node {node}")
    return f


def pressure(rho, theta) -> np.ndarray:
    return _require_positive("rho", rho) * _require_positive("theta", theta)


def internal_energy(theta, params: PhysParams) -> np.ndarray:
    return params.cv * _require_positive("theta", theta)


def entropy(rho, theta, params: PhysParams) -> np.ndarray:
    """``cv log(theta) - log(rho)``; no additive constant."""
    rho = _require_positive("rho", rho)
    theta = _require_positive("theta", theta)
    return params.cv * np.log(theta) - np.log(rho)


def viscous_stress(D, params: PhysParams, symmetry_tol: float = 1e-12) -> np.ndarray:
    """Newtonian stress ``2 mu (D - tr(D)/3 I) + eta tr(D) I``.

    ``D`` has shape ``(3, 3, ...)`` and must be symmetric.
    """
    D = np.asarray(D, dtype=float)
    asym = np.max(np.abs(D - D.swapaxes(0, 1))) if D.size else 0.0
    scale = max(1.0, float(np.max(np.abs(D)))) if D.size else 1.0
    if asym > symmetry_tol * scale:
        raise ValueError(f"strain rate tensor is not symmetric (max asymmetry {asym:.3e})")
    tr = np.trace(D, axis1=0, axis2=1)
    eye = np.eye(3).reshape((3, 3) + (1,) * (D.ndim - 2))
    return 2.0 * params.mu * (D - tr / 3.0 * eye) + params.eta * tr * eye


def heat_flux(grad_theta, params: PhysParams) -> np.ndarray:
    return -params.kappa * np.asarray(grad_theta, dtype=float)


def dissipation_density(D, params: PhysParams) -> np.ndarray:
    """``S(D) : D`` for a symmetric ``D``, as a sum of squares so it is never negative."""
    tr = np.trace(D, axis1=0, axis2=1)
    dev = np.array(D, dtype=float, copy=True)
    for i in range(3):
        dev[i, i] -= tr / 3.0
    return 2.0 * params.mu * np.einsum("ij...,ij...->...", dev, dev) + params.eta * tr**2


def double_dot(A, B) -> np.ndarray:
    return np.einsum("ij...,ij...->...", A, B)
