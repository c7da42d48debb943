import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ballvi.grid import (Grid, discrete_poincare_constant, grad_sq_density, inner,
                         laplacian_apply, linf_l2_norm, lp_norm_spacetime,
                         poincare_constant, project_ball)


def dense_neg_laplacian_1d(n, h):
    """Dense -Delta_h on the interior nodes of a 1D grid."""
    m = n - 2
    A = (2 * np.eye(m) - np.eye(m, k=1) - np.eye(m, k=-1)) / h**2
    return A


def test_zero_field():
    g = Grid((1.0, 1.0), (9, 7))
    assert np.all(laplacian_apply(g.zeros(2), g) == 0.0)


def test_stencil_hand_example():
    g = Grid((1.0,), (5,))
    u = np.array([0.0, 1.0, 2.0, 1.0, 0.0])
    out = laplacian_apply(u, g)
    assert np.allclose(out[1:-1], [0.0, 32.0, 0.0], atol=1e-12)
    dense = dense_neg_laplacian_1d(5, 0.25) @ u[1:-1]
    assert np.allclose(out[1:-1], dense, atol=1e-12)


def test_dense_oracle_2d():
    g = Grid((1.0, 2.0), (6, 5))
    rng = np.random.default_rng(0)
    u = rng.normal(size=g.shape)
    u[g.boundary_mask] = 0.0
    hx, hy = g.h
    A = np.kron(dense_neg_laplacian_1d(6, hx), np.eye(3)) + np.kron(np.eye(4), dense_neg_laplacian_1d(5, hy))
    dense = (A @ u[1:-1, 1:-1].ravel()).reshape(4, 3)
    assert np.allclose(laplacian_apply(u, g)[1:-1, 1:-1], dense, atol=1e-10)


def test_sine_eigenfunction_second_order():
    errs = []
    for n in (33, 65, 129):
        g = Grid((1.0,), (n,))
        x = g.axes()[0]
        u = np.sin(math.pi * x)
        r = laplacian_apply(u, g) - math.pi**2 * u
        errs.append(np.linalg.norm(r) / np.linalg.norm(math.pi**2 * u))
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert all(1.9 < o < 2.1 for o in orders)


def test_spacetime_norm_examples():
    g = Grid((1.0,), (65,))
    tau = 0.01
    zero = [g.zeros() for _ in range(100)]
    assert lp_norm_spacetime(zero, tau, 2, g) == 0.0
    assert linf_l2_norm(zero, tau, g) == 0.0
    ones = [np.ones(g.shape) for _ in range(100)]
    assert abs(lp_norm_spacetime(ones, tau, 2, g) - 1.0) <= g.h[0]
    assert abs(linf_l2_norm(ones, tau, g) - 1.0) <= g.h[0]
    for p in (1, 2, 3.5):
        imp = [g.zeros() for _ in range(3)]
        imp[1][10] = 2.5
        expected = tau ** (1 / p) * g.h[0] ** (1 / p) * 2.5
        assert lp_norm_spacetime(imp, tau, p, g) == pytest.approx(expected, rel=1e-14)
    assert linf_l2_norm(imp, tau, g) == pytest.approx(math.sqrt(g.h[0]) * 2.5, rel=1e-14)
    assert lp_norm_spacetime(imp, tau, math.inf, g) == 2.5


def test_norm_consistency_componentwise():
    g = Grid((1.0, 1.0), (9, 9))
    rng = np.random.default_rng(1)
    traj = [rng.normal(size=g.shape + (3,)) for _ in range(4)]
    whole = lp_norm_spacetime(traj, 0.1, 2, g) ** 2
    parts = sum(lp_norm_spacetime([f[..., c] for f in traj], 0.1, 2, g) ** 2 for c in range(3))
    assert whole == pytest.approx(parts, rel=1e-12)


def test_poincare_values():
    assert poincare_constant(Grid((1.0,), (9,))) == pytest.approx(1 / math.pi, rel=1e-15)
    assert poincare_constant(Grid((1.0, 1.0), (9, 9))) == pytest.approx(1 / (math.pi * math.sqrt(2)), rel=1e-15)
    assert poincare_constant(Grid((2.0,), (9,))) == pytest.approx(2 / math.pi, rel=1e-15)


def test_discrete_poincare_close_to_continuum():
    g = Grid((1.0,), (129,))
    A = dense_neg_laplacian_1d(129, g.h[0])
    lam1 = np.linalg.eigvalsh(A)[0]
    assert discrete_poincare_constant(g) == pytest.approx(1 / math.sqrt(lam1), rel=1e-10)
    assert abs(discrete_poincare_constant(g) / poincare_constant(g) - 1) < 1e-4


def test_project_examples():
    assert np.allclose(project_ball([0.3, -0.4]), [0.3, -0.4])
    assert np.allclose(project_ball([3.0, 4.0]), [0.6, 0.8])
    assert np.allclose(project_ball([0.0, 0.0, 2.0]), [0.0, 0.0, 1.0])


def test_self_adjoint_and_psd():
    rng = np.random.default_rng(2)
    for g in (Grid((1.0,), (40,)), Grid((1.0, 0.5), (17, 12))):
        for _ in range(20):
            u = rng.normal(size=g.shape + (2,))
            v = rng.normal(size=g.shape + (2,))
            u[g.boundary_mask] = 0.0
            v[g.boundary_mask] = 0.0
            a = inner(laplacian_apply(u, g), v, g)
            b = inner(u, laplacian_apply(v, g), g)
            scale = inner(np.abs(laplacian_apply(u, g)), np.abs(v), g) + 1.0
            assert abs(a - b) <= 1e-12 * scale
            uu = inner(laplacian_apply(u, g), u, g)
            assert uu >= 0.0
            assert uu == pytest.approx(grad_sq_density(u, g), rel=1e-12)


vec = arrays(np.float64, 3, elements=st.floats(-1e3, 1e3))


@given(vec, vec)
def test_projection_is_1_lipschitz(u, v):
    lhs = np.linalg.norm(project_ball(u) - project_ball(v))
    assert lhs <= np.linalg.norm(u - v) * (1 + 1e-12) + 1e-12


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid((1.0,), (2,))
    with pytest.raises(ValueError):
        Grid((1.0, 1.0), (5,))
