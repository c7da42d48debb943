"""Exponential penalty for the unit-ball constraint.

The penalty is ``k(s) = delta`` for ``s <= 0`` and ``delta + exp(s/eps) - 1``
for ``s > 0``, evaluated at ``s = |u|^2 - 1``.  Its primitive ``Psi`` and the
monotone nodal operator ``Phi(u) = k(|u|^2 - 1) u`` live here too.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import integrate

log = logging.getLogger(__name__)

# exp() is saturated at this exponent so overshooting iterates stay finite
EXP_CAP = 700.0


@dataclass(frozen=True)
class PenaltyParams:
    epsilon: float
    delta: float = 0.0
    delta0: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.delta0 <= 0.0:
            raise ValueError(f"delta0 must be positive, got {self.delta0}")
        if not 0.0 <= self.delta <= self.delta0:
            raise ValueError(
                f"delta must lie in [0, delta0={self.delta0}], got {self.delta}")

    def with_delta(self, delta):
        return PenaltyParams(self.epsilon, delta, self.delta0)

    def with_epsilon(self, epsilon):
        return PenaltyParams(epsilon, self.delta, self.delta0)


def _scaled(s, eps):
    """Return ``max(s, 0)/eps`` capped at EXP_CAP, logging saturation."""
    z = np.maximum(np.asarray(s, dtype=float), 0.0) / eps
    if np.any(z > EXP_CAP):
        log.debug("penalty exponent saturated (max s/eps = %g)", float(np.max(z)))
        z = np.minimum(z, EXP_CAP)
    return z


def k_eval(s, p):
    """Penalty ``k_{eps,delta}(s)``; works elementwise on arrays."""
    out = p.delta + np.expm1(_scaled(s, p.epsilon))
    return float(out) if np.ndim(out) == 0 else out


def k_prime(s, p):
    """Derivative of ``k`` in ``s`` (zero on ``s <= 0``)."""
    s = np.asarray(s, dtype=float)
    out = np.where(s > 0.0, np.exp(_scaled(s, p.epsilon)) / p.epsilon, 0.0)
    return float(out) if out.ndim == 0 else out


def k_primitive(s, p):
    """``K(s) = int_0^s k``, i.e. ``psi_eval`` with power 2, vectorised."""
    s = np.asarray(s, dtype=float)
    z = _scaled(s, p.epsilon)
    pos = (p.delta - 1.0) * s + p.epsilon * np.expm1(z)
    out = np.where(s > 0.0, pos, p.delta * s)
    return float(out) if out.ndim == 0 else out


def psi_eval(s, p, power):
    """Primitive ``Psi(s) = int_0^s k(r)^(power-1) dr``.

    Closed forms are used for ``s <= 0``, ``power == 1`` and ``power == 2``;
    higher powers on ``s > 0`` fall back to adaptive quadrature.
    """
    if power < 1 or int(power) != power:
        raise ValueError(f"power must be an integer >= 1, got {power}")
    s = float(s)
    if power == 1:
        return s
    if s <= 0.0:
        return p.delta ** (power - 1) * s
    if power == 2:
        return float(k_primitive(s, p))
    val, _ = integrate.quad(lambda r: k_eval(r, p) ** (power - 1), 0.0, s,
                            epsrel=1e-10, epsabs=0.0, limit=200)
    return val


def phi_apply(u, p):
    """Nodal operator ``k(|u|^2 - 1) u``.

    ``u`` has its components on the last axis, so a single N-vector or a whole
    field of shape ``(..., N)`` are both accepted.
    """
    u = np.asarray(u, dtype=float)
    k = k_eval(np.sum(u * u, axis=-1) - 1.0, p)
    return np.asarray(k)[..., None] * u


def radial_profile(r, p):
    """``r -> k(r^2 - 1) r``, nondecreasing on ``r >= 0``."""
    r = np.asarray(r, dtype=float)
    return k_eval(r * r - 1.0, p) * r

