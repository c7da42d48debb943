"""Problem instances: box domain, horizon, data expressions, shipped catalog."""
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .expr import compile_expr
from .grid import Grid, pointwise_norm


@dataclass(frozen=True)
class Scenario:
    """Data ``(f, u0, Omega, T, delta)`` plus the spatial resolution.

    ``f`` and ``u0`` are tuples of expression strings, one per component.
    """
    extents: tuple
    nodes: tuple
    T: float
    delta: float
    f: tuple
    u0: tuple
    label: str = "scenario"
    delta0: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "extents", tuple(np.atleast_1d(self.extents).tolist()))
        object.__setattr__(self, "nodes", tuple(int(n) for n in np.atleast_1d(self.nodes)))
        object.__setattr__(self, "f", tuple(self.f))
        object.__setattr__(self, "u0", tuple(self.u0))
        if len(self.f) != len(self.u0) or not self.f:
            raise ValueError("f and u0 need the same positive number of components")
        if self.T <= 0.0:
            raise ValueError("T must be positive")
        if not 0.0 <= self.delta <= self.delta0:
            raise ValueError("delta must lie in [0, delta0]")
        # parse eagerly so bad expressions fail at load time
        self._f_fns
        self._u0_fns

    @property
    def ncomp(self):
        return len(self.f)

    @property
    def dim(self):
        return len(self.nodes)

    @cached_property
    def grid(self):
        return Grid(self.extents, self.nodes)

    @cached_property
    def _f_fns(self):
        return [compile_expr(s) for s in self.f]

    @cached_property
    def _u0_fns(self):
        return [compile_expr(s) for s in self.u0]

    def _sample(self, fns, t):
        X, Y = self.grid.coords()
        return np.stack([np.broadcast_to(fn(X, Y, t), X.shape).astype(float) for fn in fns],
                        axis=-1)

    def forcing(self, t):
        return self._sample(self._f_fns, t)

    def initial(self):
        return self._sample(self._u0_fns, 0.0)

    def initial_is_admissible(self, slack=1e-12):
        u0 = self.initial()
        inside = self.grid.interior
        return bool(np.all(pointwise_norm(u0)[inside] <= 1.0 + slack))

    def with_changes(self, **kw):
        return replace(self, **kw)

    def to_dict(self):
        return {"dim": self.dim, "extents": list(self.extents), "nodes": list(self.nodes),
                "N": self.ncomp, "T": self.T, "delta": self.delta,
                "f": list(self.f), "u0": list(self.u0), "label": self.label}


PI = "3.141592653589793"

CATALOG = {
    # |u| stays well inside the ball for all t
    "inactive-1d": Scenario(
        extents=(1.0,), nodes=(129,), T=1.0, delta=0.1,
        f=(f"2*sin({PI}*x)", f"cos(2*{PI}*t)*x*(1-x)"),
        u0=(f"0.3*sin({PI}*x)", "0"), label="inactive-1d"),
    # f = (12, 0): the unconstrained steady state exceeds 1 in the middle
    "saturating-1d": Scenario(
        extents=(1.0,), nodes=(129,), T=1.0, delta=0.1,
        f=("12", "0"), u0=("0", "0"), label="saturating-1d"),
    # f turns around the ball once per unit time; contact set moves
    "rotating-2d": Scenario(
        extents=(1.0, 1.0), nodes=(65, 65), T=1.0, delta=0.1,
        f=(f"30*cos(2*{PI}*t)", f"30*sin(2*{PI}*t)"), u0=("0", "0"),
        label="rotating-2d"),
    "dependence-base": Scenario(
        extents=(1.0,), nodes=(129,), T=1.0, delta=0.2,
        f=(f"14*sin({PI}*x)", f"6*cos({PI}*t)"),
        u0=(f"0.5*sin({PI}*x)", f"0.5*sin(2*{PI}*x)"), label="dependence-base"),
}

# perturbation direction g for the continuous-dependence study on "dependence-base"
DEPENDENCE_PERTURBATION = ("4*x", f"2*cos(3*{PI}*x)")


def get_scenario(label):
    try:
        return CATALOG[label]
    except KeyError:
        raise KeyError(f"unknown scenario {label!r}; known: {sorted(CATALOG)}") from None
