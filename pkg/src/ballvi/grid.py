"""Uniform box grids, discrete -Laplacian with zero Dirichlet data, norms.

Fields are plain numpy arrays.  A vector field has shape ``grid.shape + (N,)``
and a scalar field has shape ``grid.shape``.  Boundary nodes are kept in the
array and carry quadrature weight zero.
"""
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Grid:
    extents: tuple
    nodes: tuple
    h: tuple = field(init=False)

    def __post_init__(self):
        extents = tuple(float(L) for L in np.atleast_1d(self.extents))
        nodes = tuple(int(n) for n in np.atleast_1d(self.nodes))
        if len(extents) != len(nodes) or len(nodes) not in (1, 2):
            raise ValueError("grid must be 1D or 2D with one extent per axis")
        if any(n < 3 for n in nodes):
            raise ValueError(f"need at least 3 nodes per axis, got {nodes}")
        if any(L <= 0.0 for L in extents):
            raise ValueError(f"extents must be positive, got {extents}")
        object.__setattr__(self, "extents", extents)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "h", tuple(L / (n - 1) for L, n in zip(extents, nodes)))

    @property
    def dim(self):
        return len(self.nodes)

    @property
    def shape(self):
        return self.nodes

    @property
    def size(self):
        return math.prod(self.nodes)

    @property
    def cell_volume(self):
        return math.prod(self.h)

    @property
    def volume(self):
        """Continuum measure of the box."""
        return math.prod(self.extents)

    def axes(self):
        return [np.linspace(0.0, L, n) for L, n in zip(self.extents, self.nodes)]

    def coords(self):
        """Nodal coordinate arrays ``(x, y)``; ``y`` is zeros in 1D."""
        ax = self.axes()
        if self.dim == 1:
            return ax[0], np.zeros_like(ax[0])
        X, Y = np.meshgrid(ax[0], ax[1], indexing="ij")
        return X, Y

    @property
    def interior(self):
        mask = np.zeros(self.shape, dtype=bool)
        mask[(slice(1, -1),) * self.dim] = True
        return mask

    @property
    def boundary_mask(self):
        return ~self.interior

    @property
    def weights(self):
        """Nodal quadrature weights: ``h^d`` inside, 0 on the boundary."""
        return self.interior * self.cell_volume

    def zeros(self, ncomp=None):
        shape = self.shape if ncomp is None else self.shape + (ncomp,)
        return np.zeros(shape)


def _as_vector(u, grid):
    u = np.asarray(u, dtype=float)
    return u if u.ndim == grid.dim + 1 else u[..., None]


def apply_dirichlet(u, grid):
    """Copy of ``u`` with boundary nodes set to zero."""
    u = np.array(u, dtype=float)
    bmask = grid.boundary_mask
    u[bmask] = 0.0
    return u


def laplacian_apply(u, grid):
    """Return ``-Delta_h u`` (positive semidefinite sign convention).

    Works componentwise on vector fields and also accepts scalar fields.
    Boundary values of the input are treated as zero; the output vanishes on
    the boundary.
    """
    scalar = np.ndim(u) == grid.dim
    v = apply_dirichlet(_as_vector(u, grid), grid)
    out = np.zeros_like(v)
    if grid.dim == 1:
        (hx,) = grid.h
        out[1:-1] = (2.0 * v[1:-1] - v[:-2] - v[2:]) / hx**2
    else:
        hx, hy = grid.h
        c = v[1:-1, 1:-1]
        out[1:-1, 1:-1] = ((2.0 * c - v[:-2, 1:-1] - v[2:, 1:-1]) / hx**2
                           + (2.0 * c - v[1:-1, :-2] - v[1:-1, 2:]) / hy**2)
    return out[..., 0] if scalar else out


def grad_sq_density(u, grid):
    """Sum of squared forward differences, per edge, scaled by ``h^d``.

    Returns the discrete ``||grad u||^2_{L^2}``.  With zero boundary values this
    equals ``<-Delta_h u, u>`` exactly.
    """
    v = apply_dirichlet(_as_vector(u, grid), grid)
    total = 0.0
    for axis, h in enumerate(grid.h):
        d = np.diff(v, axis=axis) / h
        total += np.sum(d * d)
    return total * grid.cell_volume


def inner(u, v, grid):
    """Weighted nodal inner product, summed over components."""
    u = _as_vector(u, grid)
    v = _as_vector(v, grid)
    return float(np.sum(grid.weights[..., None] * u * v))


def l2_sq(u, grid):
    return inner(u, u, grid)


def pointwise_norm(u):
    """Euclidean norm over the component axis."""
    return np.sqrt(np.sum(np.asarray(u) ** 2, axis=-1))


def _magnitude(field, grid):
    field = np.asarray(field, dtype=float)
    if field.ndim == grid.dim + 1:
        return pointwise_norm(field)
    return np.abs(field)


def lp_norm_spacetime(trajectory, tau, p, grid):
    """Discrete ``L^p(Q_T)`` norm: ``(sum_m tau sum_x h^d |.|^p)^(1/p)``.

    Each field of ``trajectory`` contributes one time slab of width ``tau``.
    Vector fields use the pointwise Euclidean norm.  ``p=inf`` takes the max
    over interior nodes and steps.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if len(trajectory) == 0:
        raise ValueError("empty trajectory")
    w = grid.weights
    inside = grid.interior
    if math.isinf(p):
        return max(float(np.max(_magnitude(f, grid)[inside], initial=0.0)) for f in trajectory)
    total = 0.0
    for f in trajectory:
        total += tau * float(np.sum(w * _magnitude(f, grid) ** p))
    return total ** (1.0 / p)


def linf_l2_norm(trajectory, tau, grid):
    """``max_m ||field_m||_{L^2(Omega)}``; ``tau`` is accepted for symmetry."""
    if len(trajectory) == 0:
        raise ValueError("empty trajectory")
    return max(math.sqrt(float(np.sum(grid.weights * _magnitude(f, grid) ** 2)))
               for f in trajectory)


def poincare_constant(grid):
    """Continuum Poincare constant ``1/sqrt(lambda_1)`` of the box."""
    lam1 = math.pi**2 * sum(1.0 / L**2 for L in grid.extents)
    return 1.0 / math.sqrt(lam1)


def discrete_poincare_constant(grid):
    """Same constant for the discrete Dirichlet Laplacian on this grid."""
    lam1 = sum(4.0 / h**2 * math.sin(math.pi * h / (2.0 * L)) ** 2
               for h, L in zip(grid.h, grid.extents))
    return 1.0 / math.sqrt(lam1)


def project_ball(v):
    """Euclidean projection onto the closed unit ball, along the last axis."""
    v = np.asarray(v, dtype=float)
    r = pointwise_norm(v)
    scale = 1.0 / np.maximum(1.0, r)
    return v * np.asarray(scale)[..., None]
