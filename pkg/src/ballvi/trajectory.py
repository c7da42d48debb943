"""Time-indexed solution record shared by both solvers."""
from dataclasses import dataclass, field

import numpy as np

from .grid import pointwise_norm


@dataclass
class Trajectory:
    """Solution levels ``u[0..M]`` at ``times``, forcing samples and multiplier.

    ``multiplier[m]`` is the penalty coefficient (penalised route) or the
    recovered Lagrange multiplier (VI route) at level ``m``.  Level 0 holds
    the initial datum; space-time norms use levels ``1..M``.
    """
    grid: object
    tau: float
    delta: float
    times: np.ndarray
    u: np.ndarray
    f: np.ndarray
    multiplier: np.ndarray
    kind: str
    iterations: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def steps(self):
        return len(self.times) - 1

    @property
    def horizon(self):
        return float(self.times[-1])

    @property
    def u0(self):
        return self.u[0]

    def levels(self, name="u"):
        """Levels ``1..M`` of ``u``, ``f`` or ``multiplier``."""
        return getattr(self, name)[1:]

    def magnitude(self):
        return pointwise_norm(self.u)
