"""Explicit a-priori constants and their certification against runs.

Every bound is computed from discrete norms of the data sampled on the run's
grid and time levels, with the continuum Poincare constant and the continuum
measures ``|Omega|`` and ``|Q_T| = |Omega| M tau``.
"""
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .grid import grad_sq_density, l2_sq, lp_norm_spacetime, poincare_constant, pointwise_norm

AUDIT_SLACK = 0.02


@dataclass(frozen=True)
class DataNorms:
    f_linf: float
    f_l2: float
    u0_l2: float
    grad_u0_l2: float
    poincare: float
    Q_measure: float
    omega_measure: float
    delta0: float

    @classmethod
    def from_samples(cls, grid, f_levels, u0, tau, delta0):
        """``f_levels`` are the forcing samples at levels ``1..M``."""
        f_levels = list(f_levels)
        T = tau * len(f_levels)
        return cls(
            f_linf=lp_norm_spacetime(f_levels, tau, math.inf, grid),
            f_l2=lp_norm_spacetime(f_levels, tau, 2, grid),
            u0_l2=math.sqrt(l2_sq(u0, grid)),
            grad_u0_l2=math.sqrt(grad_sq_density(u0, grid)),
            poincare=poincare_constant(grid),
            Q_measure=grid.volume * T,
            omega_measure=grid.volume,
            delta0=float(delta0),
        )

    @classmethod
    def from_trajectory(cls, traj, delta0):
        return cls.from_samples(traj.grid, traj.levels("f"), traj.u0, traj.tau, delta0)


def bound_energy(d):
    """``C^2 ||f||^2_{L2(Q_T)} + ||u0||^2_{L2}``; caps each energy term."""
    return d.poincare**2 * d.f_l2**2 + d.u0_l2**2


def bound_k_l1(d):
    """Bound on ``||k_hat||_{L1(Q_T)}`` exactly as stated by the estimate.

    The derivation only supports ``B/2 + delta|Q_T|``; see
    ``bound_k_l1_rederived``.  The two agree whenever ``delta <= delta0/2``.
    """
    return 0.5 * d.poincare**2 * d.f_l2**2 + 0.5 * d.u0_l2**2 + 0.5 * d.delta0 * d.Q_measure


def bound_k_l1_rederived(d):
    """``B/2 + delta0 |Q_T|``: what the energy identity actually delivers."""
    return 0.5 * bound_energy(d) + d.delta0 * d.Q_measure


def bound_u_lp(d, p):
    """``C_p`` for ``||u||_{L^p(Q_T)}`` with the smallest ``k`` having ``p <= 2k``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    k = max(1, math.ceil(p / 2))
    C = bound_k_l1(d)
    l2k = (2.0 ** (k - 1) * (2.0 * d.Q_measure + C * math.factorial(k))) ** (1.0 / (2 * k))
    return l2k * d.Q_measure ** (1.0 / p - 1.0 / (2 * k))


def bound_k_lp(d, p):
    """``C_bar_p`` for ``||k_hat||_{L^p(Q_T)}``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    Cp = bound_u_lp(d, p)
    total = (d.f_linf**p * Cp**p
             + 0.5 * d.delta0 ** (p - 1) * p * d.u0_l2**2
             + d.delta0**p * p * d.Q_measure)
    return total ** (1.0 / p)


def bound_dt(d):
    """Right side of the time-derivative estimate."""
    return d.delta0 * d.omega_measure + d.f_l2**2 + d.grad_u0_l2**2 + d.delta0 * d.u0_l2**2


@dataclass
class EstimateRecord:
    name: str
    bound: float
    measured: float
    passed: bool


@dataclass
class EstimateReport:
    records: list
    inputs: dict
    slack: float = AUDIT_SLACK
    meta: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(r.passed for r in self.records)

    def record(self, name):
        for r in self.records:
            if r.name == name:
                return r
        raise KeyError(name)

    def failures(self):
        return [r for r in self.records if not r.passed]

    def to_dict(self):
        return {"passed": self.passed, "slack": self.slack, "inputs": self.inputs,
                "records": [asdict(r) for r in self.records], "meta": self.meta}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_num)

    def table(self):
        lines = [f"{'estimate':<28}{'measured':>16}{'bound':>16}  verdict"]
        for r in self.records:
            verdict = "pass" if r.passed else "FAIL"
            lines.append(f"{r.name:<28}{r.measured:>16.6e}{r.bound:>16.6e}  {verdict}")
        return "\n".join(lines)


def _num(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(type(x))


def measured_quantities(traj, p_list):
    """Discrete norms of a run that the estimates constrain."""
    grid, tau = traj.grid, traj.tau
    u_levels = traj.levels("u")
    k_levels = traj.levels("multiplier")
    l2_by_level = [l2_sq(u, grid) for u in traj.u]
    grad_by_level = [grad_sq_density(u, grid) for u in u_levels]
    ku2 = [float(np.sum(grid.weights * k * np.sum(u * u, axis=-1)))
           for k, u in zip(k_levels, u_levels)]
    # running combination ||u(t)||^2 + int_0^t |grad u|^2 + 2 int_0^t k|u|^2
    combined = l2_by_level[0]
    acc = 0.0
    for m in range(len(u_levels)):
        acc += tau * (grad_by_level[m] + 2.0 * ku2[m])
        combined = max(combined, l2_by_level[m + 1] + acc)
    du = [(b - a) / tau for a, b in zip(traj.u[:-1], traj.u[1:])]
    out = {
        "sup_l2_sq": max(l2_by_level),
        "grad_l2_sq": tau * sum(grad_by_level),
        "two_k_u2_l1": 2.0 * tau * sum(ku2),
        "energy_combined": combined,
        "k_l1": lp_norm_spacetime(k_levels, tau, 1, grid),
        "dt_l2_sq": sum(tau * l2_sq(v, grid) for v in du),
        "sup_grad_sq": max(grad_by_level + [grad_sq_density(traj.u0, grid)]),
    }
    for p in p_list:
        out[f"u_l{p:g}"] = lp_norm_spacetime(u_levels, tau, p, grid)
        out[f"k_l{p:g}"] = lp_norm_spacetime(k_levels, tau, p, grid)
    return out


def audit_run(traj, delta0, p_list=(1, 2, 4), slack=AUDIT_SLACK, data=None):
    """Check every measured norm of ``traj`` against its a-priori bound."""
    d = data if data is not None else DataNorms.from_trajectory(traj, delta0)
    meas = measured_quantities(traj, p_list)
    B = bound_energy(d)
    R = bound_dt(d)
    pairs = [
        ("energy.sup_l2_sq", B, meas["sup_l2_sq"]),
        ("energy.grad_l2_sq", B, meas["grad_l2_sq"]),
        ("energy.two_k_u2_l1", B, meas["two_k_u2_l1"]),
        ("energy.combined", B, meas["energy_combined"]),
        ("k_l1", bound_k_l1(d), meas["k_l1"]),
        ("dt.dt_l2_sq", R, meas["dt_l2_sq"]),
        ("dt.sup_grad_sq", R, meas["sup_grad_sq"]),
    ]
    for p in p_list:
        pairs.append((f"u_lp[p={p:g}]", bound_u_lp(d, p), meas[f"u_l{p:g}"]))
        pairs.append((f"k_lp[p={p:g}]", bound_k_lp(d, p), meas[f"k_l{p:g}"]))
    records = [EstimateRecord(n, float(b), float(m), bool(m <= b * (1.0 + slack)))
               for n, b, m in pairs]
    inputs = asdict(d)
    inputs["p_list"] = list(p_list)
    return EstimateReport(records, inputs, slack, meta={"kind": traj.kind, **traj.meta})


def energy_balance_gap(traj):
    """``lhs - rhs`` of the discrete energy inequality, maximised over levels.

    ``lhs = 1/2 ||u_m||^2 + sum tau ||grad u||^2 + sum tau <k u, u>`` and
    ``rhs = 1/2 ||u_0||^2 + sum tau <f, u>``.  Nonpositive up to solver error.
    """
    grid, tau = traj.grid, traj.tau
    acc_l = acc_r = 0.0
    worst = -math.inf
    half0 = 0.5 * l2_sq(traj.u0, grid)
    for m in range(1, traj.steps + 1):
        u, k, f = traj.u[m], traj.multiplier[m], traj.f[m]
        acc_l += tau * (grad_sq_density(u, grid) + float(np.sum(grid.weights * k * np.sum(u * u, -1))))
        acc_r += tau * float(np.sum(grid.weights[..., None] * f * u))
        worst = max(worst, 0.5 * l2_sq(u, grid) + acc_l - half0 - acc_r)
    return worst


def constraint_violation_l1(traj):
    """``||(|u|^2 - 1)^+||_{L1(Q_T)}``."""
    s = np.maximum(np.sum(traj.levels("u") ** 2, axis=-1) - 1.0, 0.0)
    return lp_norm_spacetime(list(s), traj.tau, 1, traj.grid)


def complementarity_l1(traj):
    """``||(lambda - delta)(|u| - 1)||_{L1(Q_T)}``."""
    lam = traj.levels("multiplier")
    gap = np.abs(pointwise_norm(traj.levels("u")) - 1.0)
    return lp_norm_spacetime(list((lam - traj.delta) * gap), traj.tau, 1, traj.grid)
