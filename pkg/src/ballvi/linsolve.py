"""Matrix-free conjugate gradients for ``(1/tau + c) I - Delta_h``.

The operator acts on vector fields of shape ``grid.shape + (N,)``.  An optional
per-node symmetric ``N x N`` block can be added to the diagonal shift; the
penalised Newton step needs it for the rank-one part of the Jacobian.
"""
import math
from dataclasses import dataclass

import numpy as np

from .grid import apply_dirichlet, laplacian_apply


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver exhausts its budget."""

    def __init__(self, msg, iterations, residual):
        super().__init__(f"{msg} (iterations={iterations}, residual={residual:.3e})")
        self.iterations = iterations
        self.residual = residual


@dataclass
class ShiftedOperator:
    grid: object
    tau: float
    shift: object = 0.0       # scalar or scalar field, >= 0
    block: object = None      # optional (..., N, N) symmetric PSD field

    def __post_init__(self):
        if self.tau <= 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if np.any(np.asarray(self.shift) < 0.0):
            raise ValueError("shift field must be nonnegative")

    def diagonal_shift(self):
        return 1.0 / self.tau + np.broadcast_to(np.asarray(self.shift, float), self.grid.shape)

    def __call__(self, u):
        out = laplacian_apply(u, self.grid) + self.diagonal_shift()[..., None] * u
        if self.block is not None:
            out += np.einsum("...ij,...j->...i", self.block, u)
        return apply_dirichlet(out, self.grid)

    def block_diagonal(self, ncomp):
        """Per-node ``N x N`` diagonal block of the operator."""
        d = self.diagonal_shift() + sum(2.0 / h**2 for h in self.grid.h)
        B = d[..., None, None] * np.eye(ncomp)
        if self.block is not None:
            B = B + self.block
        return B


@dataclass
class CGResult:
    u: np.ndarray
    iterations: int
    residual: float


def cg_solve(op, rhs, tol=1e-10, max_iter=5000, precondition=False, x0=None):
    """Solve ``op(u) = rhs`` on the interior nodes.

    Stops when ``||op(u) - rhs||_2 <= tol * ||rhs||_2`` (plain Euclidean norms
    over interior entries).  ``precondition=True`` enables block-Jacobi.
    """
    grid = op.grid
    b = apply_dirichlet(rhs, grid)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return CGResult(np.zeros_like(b), 0, 0.0)

    if precondition:
        Binv = np.linalg.inv(op.block_diagonal(b.shape[-1]))

        def M(r):
            return apply_dirichlet(np.einsum("...ij,...j->...i", Binv, r), grid)
    else:
        def M(r):
            return r

    x = np.zeros_like(b) if x0 is None else apply_dirichlet(x0, grid)
    target = tol * bnorm
    it = 0
    best = math.inf
    while True:
        x, it = _cg_cycle(op, M, b, x, target, it, max_iter, bnorm)
        true_res = np.linalg.norm(b - op(x))
        if true_res <= target * (1.0 + 1e-6):
            return CGResult(x, it, true_res / bnorm)
        # the recurrence drifted below the true residual: restart unless stagnating
        if true_res > 0.9 * best:
            raise ConvergenceError("CG stagnated above the requested tolerance",
                                   it, true_res / bnorm)
        best = true_res


def _cg_cycle(op, M, b, x, target, it, max_iter, bnorm):
    r = b - op(x)
    z = M(r)
    d = z.copy()
    rz = np.vdot(r, z)
    rnorm = np.linalg.norm(r)
    while rnorm > target:
        if it >= max_iter:
            raise ConvergenceError("CG did not converge", it, rnorm / bnorm)
        Ad = op(d)
        alpha = rz / np.vdot(d, Ad)
        x += alpha * d
        r -= alpha * Ad
        it += 1
        # recompute the true residual now and then to limit drift
        if it % 50 == 0:
            r = b - op(x)
        rnorm = np.linalg.norm(r)
        z = M(r)
        rz_new = np.vdot(r, z)
        d = z + (rz_new / rz) * d
        rz = rz_new
    return x, it
