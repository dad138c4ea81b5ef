import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsfsim.constitutive import (PhysParams, PositivityError, dissipation_density, double_dot,
                                 entropy, heat_flux, internal_energy, pressure, viscous_stress)


def test_params_defaults_and_validation():
    p = PhysParams()
    assert (p.mu, p.eta, p.kappa, p.cv) == (1.0, 0.0, 1.0, 1.5)
    for key, bad in (("mu", 0.0), ("eta", -0.1), ("kappa", -1.0), ("cv", 0.0),
                     ("mu", math.nan)):
        with pytest.raises(ValueError, match=key):
            PhysParams(**{key: bad})


def test_pressure_examples():
    assert pressure(2.0, 3.0) == 6.0
    assert pressure(1.0, 1.0) == 1.0
    theta = np.linspace(0.5, 3.0, 11)
    np.testing.assert_allclose(pressure(1.0 / theta, theta), 1.0, rtol=1e-15)


def test_pressure_rejects_nonpositive():
    with pytest.raises(PositivityError):
        pressure(np.array([1.0, 0.0]), np.array([1.0, 1.0]))
    with pytest.raises(PositivityError):
        pressure(1.0, -2.0)


def test_internal_energy_examples():
    assert internal_energy(1.0, PhysParams(cv=1.5)) == 1.5
    assert internal_energy(300.0, PhysParams(cv=1.0)) == 300.0
    th = np.array([0.3, 2.0])
    np.testing.assert_array_equal(internal_energy(2 * th, PhysParams()),
                                  2 * internal_energy(th, PhysParams()))


def test_entropy_examples():
    assert entropy(1.0, 1.0, PhysParams()) == 0.0
    assert entropy(1.0, math.e, PhysParams(cv=1.0)) == pytest.approx(1.0, abs=1e-15)
    for cv in (0.5, 1.5, 4.0):
        assert entropy(math.e, 1.0, PhysParams(cv=cv)) == pytest.approx(-1.0, abs=1e-15)


def test_gibbs_relation_by_finite_differences():
    p = PhysParams(cv=1.5)
    rho, theta, h = 1.3, 0.7, 1e-4
    ds_dth = (entropy(rho, theta + h, p) - entropy(rho, theta - h, p)) / (2 * h)
    de_dth = (internal_energy(theta + h, p) - internal_energy(theta - h, p)) / (2 * h)
    ds_drho = (entropy(rho + h, theta, p) - entropy(rho - h, theta, p)) / (2 * h)
    assert abs(theta * ds_dth - de_dth) <= 1e-6
    assert abs(theta * ds_drho + pressure(rho, theta) / rho**2) <= 1e-6
    assert abs(theta * ds_drho + theta / rho) <= 1e-6


def _tensor(a):
    return np.asarray(a, dtype=float).reshape(3, 3, 1)


def test_viscous_stress_examples():
    p = PhysParams(mu=1.0, eta=0.0)
    np.testing.assert_array_equal(viscous_stress(_tensor(np.zeros((3, 3))), p), 0.0)
    np.testing.assert_allclose(viscous_stress(_tensor(np.eye(3)), p), 0.0, atol=1e-15)
    S = viscous_stress(_tensor(np.diag([3.0, 0.0, 0.0])), p)[..., 0]
    np.testing.assert_allclose(S, np.diag([4.0, -2.0, -2.0]), atol=1e-14)


def test_viscous_stress_bulk_term():
    S = viscous_stress(_tensor(np.eye(3)), PhysParams(mu=1.0, eta=2.0))[..., 0]
    np.testing.assert_allclose(S, 6.0 * np.eye(3), atol=1e-14)


def test_viscous_stress_rejects_asymmetric():
    with pytest.raises(ValueError):
        viscous_stress(_tensor([[0, 1, 0], [0, 0, 0], [0, 0, 0]]), PhysParams())


def test_heat_flux_examples():
    np.testing.assert_array_equal(heat_flux(np.array([1.0, 0, 0]), PhysParams(kappa=2.0)),
                                  [-2.0, 0.0, 0.0])
    np.testing.assert_array_equal(heat_flux(np.zeros(3), PhysParams()), 0.0)
    g = np.array([0.3, -1.2, 4.0])
    np.testing.assert_array_equal(heat_flux(-g, PhysParams()), -heat_flux(g, PhysParams()))


def _random_symmetric(rng, n):
    A = rng.normal(size=(3, 3, n))
    return 0.5 * (A + A.transpose(1, 0, 2))


def test_dissipation_nonnegative_on_random_tensors():
    rng = np.random.default_rng(7)
    D = _random_symmetric(rng, 1000)
    for params in (PhysParams(mu=1.0, eta=0.0), PhysParams(mu=0.3, eta=2.0)):
        d = double_dot(viscous_stress(D, params), D)
        assert np.all(d >= -1e-12)
        assert np.all(dissipation_density(D, params) >= 0.0)
        np.testing.assert_allclose(dissipation_density(D, params), d, rtol=1e-12, atol=1e-12)


def test_dissipation_of_pure_expansion_uses_bulk_only():
    D = _tensor(2.0 * np.eye(3))
    assert dissipation_density(D, PhysParams(mu=5.0, eta=0.0))[0] == pytest.approx(0.0, abs=1e-13)
    assert dissipation_density(D, PhysParams(mu=5.0, eta=1.0))[0] == pytest.approx(36.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**31 - 1))
def test_viscous_stress_linear(a, b, seed):
    rng = np.random.default_rng(seed)
    D1, D2 = _random_symmetric(rng, 4), _random_symmetric(rng, 4)
    p = PhysParams(mu=0.7, eta=0.2)
    lhs = viscous_stress(a * D1 + b * D2, p)
    rhs = a * viscous_stress(D1, p) + b * viscous_stress(D2, p)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)
