import numpy as np
import pytest

from ballvi.grid import Grid, laplacian_apply
from ballvi.linsolve import ConvergenceError, ShiftedOperator, cg_solve


def dense_operator(op, grid, ncomp):
    """Assemble the interior block of ``op`` column by column."""
    idx = np.argwhere(grid.interior)
    n = len(idx) * ncomp
    A = np.zeros((n, n))
    for j in range(n):
        e = grid.zeros(ncomp)
        node, c = divmod(j, ncomp)
        e[tuple(idx[node]) + (c,)] = 1.0
        col = op(e)
        A[:, j] = np.stack([col[tuple(i)] for i in idx]).ravel()
    return A, idx


def test_zero_rhs():
    g = Grid((1.0,), (9,))
    res = cg_solve(ShiftedOperator(g, 1.0), g.zeros(2))
    assert res.iterations == 0 and np.all(res.u == 0.0)


@pytest.mark.parametrize("shape", [((1.0,), (5,)), ((1.0,), (40,)), ((1.0, 1.0), (8, 9))])
def test_against_dense_lu(shape):
    g = Grid(*shape)
    rng = np.random.default_rng(3)
    shift = rng.uniform(0.0, 3.0, size=g.shape)
    op = ShiftedOperator(g, 1.0, shift=shift)
    A, idx = dense_operator(op, g, 2)
    rhs = rng.normal(size=g.shape + (2,))
    rhs[g.boundary_mask] = 0.0
    exact = np.linalg.solve(A, np.stack([rhs[tuple(i)] for i in idx]).ravel())
    for pre in (False, True):
        got = cg_solve(op, rhs, tol=1e-13, precondition=pre).u
        got_flat = np.stack([got[tuple(i)] for i in idx]).ravel()
        assert np.max(np.abs(got_flat - exact)) <= 1e-10 * max(1.0, np.max(np.abs(exact)))


def test_stiff_shift():
    # low-frequency rhs, so -Delta_h contributes ~0.6/1e6 relative
    g = Grid((4.0,), (65,))
    x = g.axes()[0]
    rhs = np.sin(np.pi * x / 4.0)[:, None]
    tau, c = 1.0, 1e6
    op = ShiftedOperator(g, tau, shift=c)
    u = cg_solve(op, rhs, tol=1e-14).u
    approx = rhs * tau / (1 + c * tau)
    inside = g.interior
    rel = np.abs(u[inside] - approx[inside]) / np.abs(approx[inside])
    assert np.max(rel) <= 1e-6
    A, idx = dense_operator(op, g, 1)
    exact = np.linalg.solve(A, rhs[1:-1, 0])
    assert np.allclose(u[1:-1, 0], exact, rtol=1e-10)


def test_residual_contract():
    g = Grid((1.0, 1.0), (17, 17))
    rng = np.random.default_rng(5)
    op = ShiftedOperator(g, 0.01, shift=rng.uniform(0, 50, size=g.shape))
    rhs = rng.normal(size=g.shape + (2,))
    rhs[g.boundary_mask] = 0.0
    res = cg_solve(op, rhs, tol=1e-10)
    r = rhs - op(res.u)
    assert np.linalg.norm(r) <= 1e-10 * np.linalg.norm(rhs) * 1.0001


def test_component_permutation_invariance():
    g = Grid((1.0,), (50,))
    rng = np.random.default_rng(6)
    op = ShiftedOperator(g, 0.1, shift=rng.uniform(0, 5, size=g.shape))
    rhs = rng.normal(size=g.shape + (3,))
    rhs[g.boundary_mask] = 0.0
    perm = [2, 0, 1]
    a = cg_solve(op, rhs, tol=1e-12).u
    b = cg_solve(op, rhs[..., perm], tol=1e-12).u
    assert np.allclose(a[..., perm], b, rtol=1e-9, atol=1e-12)


def test_operator_matches_laplacian():
    g = Grid((1.0,), (20,))
    rng = np.random.default_rng(8)
    u = rng.normal(size=g.shape + (2,))
    u[g.boundary_mask] = 0.0
    op = ShiftedOperator(g, 0.5, shift=2.0)
    assert np.allclose(op(u), u / 0.5 + 2.0 * u + laplacian_apply(u, g))


def test_budget_exhaustion_raises():
    g = Grid((1.0,), (200,))
    rhs = np.ones(g.shape + (1,))
    rhs[g.boundary_mask] = 0.0
    with pytest.raises(ConvergenceError):
        cg_solve(ShiftedOperator(g, 1e6), rhs, tol=1e-14, max_iter=3)


def test_unattainable_tolerance_raises_instead_of_looping():
    g = Grid((1.0,), (129,))
    rhs = np.ones(g.shape + (2,))
    with pytest.raises(ConvergenceError):
        cg_solve(ShiftedOperator(g, 0.005, shift=0.1), rhs, tol=1e-17)
