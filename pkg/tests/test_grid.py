import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsfsim.grid import (Grid, boundary_integral, conservative_divergence, divergence,
                         gradient, integrate, laplacian, lp_norm, multi_indices, partial,
                         sobolev_norm, strain_rate, trace_max)
from manufactured import observed_order, sine_bump


def test_grid_shape_and_spacing():
    g = Grid((2.0, 1.0, 1.0), (8, 4, 4))
    assert g.shape == (9, 5, 5)
    assert g.spacing == (0.25, 0.25, 0.25)
    assert g.volume == 2.0


@pytest.mark.parametrize("cells", [(3, 8, 8), (8, 8, 0)])
def test_grid_rejects_tiny(cells):
    with pytest.raises(ValueError):
        Grid((1.0, 1.0, 1.0), cells)


def test_grid_rejects_nonpositive_extent():
    with pytest.raises(ValueError):
        Grid((1.0, -1.0, 1.0), (8, 8, 8))


def test_gradient_of_constant_and_linear():
    g = Grid.cube(8)
    assert np.all(gradient(np.full(g.shape, 3.0), g) == 0.0)
    X, _, _ = g.coordinates()
    G = gradient(X, g)
    np.testing.assert_allclose(G[0], 1.0, atol=1e-12)
    np.testing.assert_allclose(G[1:], 0.0, atol=1e-12)


def test_gradient_second_order():
    errs = []
    for n in (16, 32):
        g = Grid.cube(n)
        X, _, _ = g.coordinates()
        errs.append(np.max(np.abs(partial(np.sin(np.pi * X), g, 0) - np.pi * np.cos(np.pi * X))))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_divergence_examples():
    g = Grid.cube(8)
    X, Y, Z = g.coordinates()
    np.testing.assert_allclose(divergence(np.stack([X, Y, Z]), g), 3.0, atol=1e-12)
    np.testing.assert_allclose(divergence(np.ones((3, *g.shape)), g), 0.0, atol=1e-12)
    errs = []
    for n in (16, 32):
        g = Grid.cube(n)
        X, _, _ = g.coordinates()
        v = np.stack([np.sin(np.pi * X), 0 * X, 0 * X])
        errs.append(lp_norm(divergence(v, g) - np.pi * np.cos(np.pi * X), g))
    assert observed_order(*errs) >= 1.9


def test_strain_rate_examples():
    g = Grid.cube(6)
    X, Y, Z = g.coordinates()
    D = strain_rate(np.stack([Y, 0 * Y, 0 * Y]), g)
    expect = np.zeros((3, 3))
    expect[0, 1] = expect[1, 0] = 0.5
    np.testing.assert_allclose(D, expect[:, :, None, None, None] * np.ones(g.shape), atol=1e-12)
    D = strain_rate(np.stack([X, Y, Z]), g)
    np.testing.assert_allclose(D, np.eye(3)[:, :, None, None, None] * np.ones(g.shape),
                               atol=1e-12)


def test_trace_of_strain_is_divergence():
    g = Grid.cube(10)
    rng = np.random.default_rng(3)
    X, Y, Z = g.coordinates()
    c = rng.normal(size=(3, 3))
    u = np.stack([np.sin(c[i, 0] * X + c[i, 1] * Y * Z + c[i, 2]) for i in range(3)])
    tr = np.trace(strain_rate(u, g), axis1=0, axis2=1)
    assert np.max(np.abs(tr - divergence(u, g))) <= 1e-12


def test_laplacian_examples():
    g = Grid.cube(8)
    X, Y, Z = g.coordinates()
    np.testing.assert_allclose(laplacian(X + 2 * Y - Z, g), 0.0, atol=1e-9)
    np.testing.assert_allclose(laplacian(X**2 + Y**2 + Z**2, g), 6.0, rtol=1e-10)
    errs = []
    for n in (16, 32):
        g = Grid.cube(n)
        f = sine_bump(g)
        errs.append(lp_norm(laplacian(f, g) + 3 * np.pi**2 * f, g))
    assert observed_order(*errs) >= 1.9


def test_integrate_examples():
    assert integrate(np.ones(Grid.cube(8).shape), Grid.cube(8)) == pytest.approx(1.0, abs=1e-14)
    box = Grid((2.0, 1.0, 1.0), (8, 4, 4))
    assert integrate(np.ones(box.shape), box) == pytest.approx(2.0, abs=1e-14)
    g = Grid.cube(32)
    X, _, _ = g.coordinates()
    assert integrate(np.sin(np.pi * X), g) == pytest.approx(2 / np.pi, abs=2 / 32**2)


def test_lp_norm_examples():
    g = Grid.cube(32)
    assert lp_norm(np.ones(g.shape), g) == pytest.approx(1.0, abs=1e-14)
    X, _, _ = g.coordinates()
    assert lp_norm(np.sin(np.pi * X), g) == pytest.approx(1 / math.sqrt(2), abs=1e-3)
    v = np.zeros((3, *g.shape))
    v[0], v[1] = 3.0, 4.0
    assert lp_norm(v, g, np.inf) == 5.0
    with pytest.raises(ValueError):
        lp_norm(X, g, 0.5)


def test_sobolev_examples():
    g = Grid.cube(8)
    c = np.full(g.shape, -2.5)
    for k in range(4):
        assert sobolev_norm(c, g, k) == pytest.approx(2.5, rel=1e-13)
    X, _, _ = g.coordinates()
    # trapezoid over x^2 with h = 1/8 gives 1/3 + h^2/6
    assert sobolev_norm(X, g, 1) == pytest.approx(math.sqrt(1 / 3 + 1 / 384 + 1), rel=1e-13)
    f = np.sin(X * 2.0)
    assert sobolev_norm(f, g, 0) == lp_norm(f, g, 2)
    with pytest.raises(ValueError):
        sobolev_norm(f, g, 4)


def test_sobolev_converges_to_analytic():
    g = Grid.cube(48)
    X, _, _ = g.coordinates()
    assert sobolev_norm(X, g, 1) == pytest.approx(math.sqrt(4 / 3), rel=1e-4)


def test_multi_indices_count():
    assert [len(list(multi_indices(k))) for k in range(4)] == [1, 3, 6, 10]


def test_boundary_integral_examples():
    g = Grid.cube(8)
    assert boundary_integral(np.ones(g.shape), g) == pytest.approx(6.0, abs=1e-13)
    box = Grid((2.0, 1.0, 1.0), (8, 4, 4))
    assert boundary_integral(np.ones(box.shape), box) == pytest.approx(10.0, abs=1e-13)
    X, _, _ = g.coordinates()
    assert boundary_integral(X, g) == pytest.approx(3.0, abs=1e-13)


def test_trace_max():
    g = Grid.cube(8)
    assert trace_max(sine_bump(g), g) < 1e-15


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 9), st.integers(4, 9), st.integers(4, 9), st.integers(0, 2**31 - 1))
def test_conservative_divergence_telescopes(nx, ny, nz, seed):
    """Integral of the flux divergence is the net wall flux, zero when impermeable."""
    g = Grid((1.0, 1.3, 0.7), (nx, ny, nz))
    F = np.random.default_rng(seed).normal(size=(3, *g.shape))
    F[0][[0, -1]] = 0.0
    F[1][:, [0, -1]] = 0.0
    F[2][:, :, [0, -1]] = 0.0
    scale = np.sum(np.abs(F)) * max(g.spacing) ** 2
    assert abs(integrate(conservative_divergence(F, g), g)) <= 1e-13 * max(scale, 1.0)


def test_conservative_divergence_interior_matches_central():
    g = Grid.cube(10)
    F = np.random.default_rng(1).normal(size=(3, *g.shape))
    inner = (slice(1, -1),) * 3
    np.testing.assert_allclose(conservative_divergence(F, g)[inner], divergence(F, g)[inner],
                               atol=1e-12)
