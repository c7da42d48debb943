"""Reference solver for the variational inequality on the unit ball.

Every implicit Euler step minimises

    J(v) = 1/2 <((1/tau + delta) I - Delta_h) v, v> - <f + u_prev/tau, v>

over nodewise ``|v| <= 1`` by projected block Gauss-Seidel: nodes are visited
in lexicographic order, the local ``N x N`` problem (a multiple of the
identity) is solved exactly and the result is projected onto the ball.
"""
import logging
import math
from dataclasses import dataclass

import numba
import numpy as np

from .grid import apply_dirichlet, grad_sq_density, laplacian_apply, pointwise_norm
from .solver_pen import StepError, admissible_initial, num_steps, sample_forcing
from .trajectory import Trajectory

log = logging.getLogger(__name__)


@dataclass
class ViRunConfig:
    delta: float
    tau: float
    T: float
    pgs_tol: float = 1e-11
    pgs_max_sweeps: int = 200000
    contact_tol: float = 1e-6
    lambda_floor_slack: float = 1e-6

    def __post_init__(self):
        if self.delta < 0.0:
            raise ValueError("delta must be nonnegative")
        for name in ("tau", "T", "pgs_tol", "contact_tol"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")

    @property
    def steps(self):
        return num_steps(self.T, self.tau)


@numba.njit(cache=True, nogil=True)
def _project_node(v):
    r = 0.0
    for c in range(v.shape[0]):
        r += v[c] * v[c]
    r = math.sqrt(r)
    if r > 1.0:
        for c in range(v.shape[0]):
            v[c] /= r


@numba.njit(cache=True, nogil=True)
def _sweeps_1d(u, b, a, cx, max_sweeps, tol):
    n, N = u.shape
    v = np.empty(N)
    change = 0.0
    for sweep in range(1, max_sweeps + 1):
        change = 0.0
        for i in range(1, n - 1):
            for c in range(N):
                v[c] = (b[i, c] + cx * (u[i - 1, c] + u[i + 1, c])) / a
            _project_node(v)
            for c in range(N):
                d = abs(v[c] - u[i, c])
                if d > change:
                    change = d
                u[i, c] = v[c]
        if change <= tol:
            return sweep, change
    return max_sweeps, change


@numba.njit(cache=True, nogil=True)
def _sweeps_2d(u, b, a, cx, cy, max_sweeps, tol):
    nx, ny, N = u.shape
    v = np.empty(N)
    change = 0.0
    for sweep in range(1, max_sweeps + 1):
        change = 0.0
        for i in range(1, nx - 1):
            for j in range(1, ny - 1):
                for c in range(N):
                    v[c] = (b[i, j, c] + cx * (u[i - 1, j, c] + u[i + 1, j, c])
                            + cy * (u[i, j - 1, c] + u[i, j + 1, c])) / a
                _project_node(v)
                for c in range(N):
                    d = abs(v[c] - u[i, j, c])
                    if d > change:
                        change = d
                    u[i, j, c] = v[c]
        if change <= tol:
            return sweep, change
    return max_sweeps, change


def _diag(grid, tau, delta):
    return 1.0 / tau + delta + sum(2.0 / h**2 for h in grid.h)


def pgs_sweeps(u, b, grid, tau, delta, max_sweeps, tol):
    """Run PGS sweeps in place on ``u``; returns ``(sweeps, last_change)``."""
    a = _diag(grid, tau, delta)
    if grid.dim == 1:
        return _sweeps_1d(u, b, a, 1.0 / grid.h[0] ** 2, max_sweeps, tol)
    return _sweeps_2d(u, b, a, 1.0 / grid.h[0] ** 2, 1.0 / grid.h[1] ** 2, max_sweeps, tol)


def step_objective(v, u_prev, f_now, grid, tau, delta):
    """The quadratic ``J`` minimised by one step (unweighted nodal sums)."""
    inside = grid.interior
    b = f_now + u_prev / tau
    local = 0.5 * (1.0 / tau + delta) * np.sum(v * v, axis=-1) - np.sum(b * v, axis=-1)
    return float(np.sum(local[inside])) + 0.5 * grad_sq_density(v, grid) / grid.cell_volume


@dataclass
class ViStepResult:
    u: np.ndarray
    sweeps: int
    change: float
    kkt: dict


def kkt_check(u, u_prev, f_now, grid, cfg, angle_tol=1e-3):
    """Check the nodal optimality conditions of a VI step.

    Works with ``res = a u - (b + neighbours)``, the residual of the local
    unconstrained equation.  Free nodes need ``|res| <= a * pgs_tol`` (times a
    small safety factor); contact nodes need ``res = -mu u`` with ``mu >= 0``,
    i.e. ``res`` anti-parallel to ``u``.
    """
    a = _diag(grid, cfg.tau, cfg.delta)
    # a u - rhs_local == (operator u - b) at each node
    res = ((1.0 / cfg.tau + cfg.delta) * u + laplacian_apply(u, grid)
           - (f_now + u_prev / cfg.tau))
    res = apply_dirichlet(res, grid)
    inside = grid.interior
    mag = pointwise_norm(u)
    rnorm = pointwise_norm(res)
    free = inside & (mag < 1.0 - cfg.contact_tol)
    contact = inside & ~free
    free_tol = 4.0 * a * cfg.pgs_tol
    free_res = float(np.max(rnorm[free], initial=0.0))
    # angle only meaningful where the reaction dominates solver noise
    strong = contact & (rnorm > 1e3 * free_tol)
    cosang = -np.sum(res * u, axis=-1)[strong] / (rnorm[strong] * mag[strong])
    worst_angle = float(np.max(np.arccos(np.clip(cosang, -1.0, 1.0)), initial=0.0))
    return {"free_residual": free_res, "free_tol": free_tol,
            "worst_angle": worst_angle, "contact_nodes": int(np.sum(contact)),
            "ok": free_res <= free_tol and worst_angle <= angle_tol}


def vi_step(u_prev, f_now, grid, cfg):
    """One implicit Euler step of the VI, warm-started from ``u_prev``."""
    u = np.ascontiguousarray(apply_dirichlet(u_prev, grid))
    b = np.ascontiguousarray(apply_dirichlet(f_now + u_prev / cfg.tau, grid))
    sweeps, change = pgs_sweeps(u, b, grid, cfg.tau, cfg.delta, cfg.pgs_max_sweeps, cfg.pgs_tol)
    if change > cfg.pgs_tol:
        raise StepError(f"PGS sweep budget exhausted (last change {change:.3e})", residual=change)
    kkt = kkt_check(u, u_prev, f_now, grid, cfg)
    if not kkt["ok"]:
        log.warning("VI step KKT check failed: %s", kkt)
    return ViStepResult(u, sweeps, change, kkt)


def vi_run(scenario, cfg):
    grid = scenario.grid
    u0 = admissible_initial(scenario.initial(), grid)
    M = cfg.steps
    times = cfg.tau * np.arange(M + 1)
    f = sample_forcing(scenario, times)
    u = np.empty((M + 1,) + u0.shape)
    u[0] = u0
    sweeps, changes, kkt_ok = [], [], True
    for m in range(1, M + 1):
        try:
            step = vi_step(u[m - 1], f[m], grid, cfg)
        except StepError as exc:
            raise StepError(str(exc), step=m, residual=exc.residual) from exc
        u[m] = step.u
        sweeps.append(step.sweeps)
        changes.append(step.change)
        kkt_ok &= step.kkt["ok"]
        if float(np.max(pointwise_norm(step.u))) > 1.0 + 1e-12:
            raise StepError("VI iterate left the unit ball", step=m)
    traj = Trajectory(grid=grid, tau=cfg.tau, delta=cfg.delta, times=times, u=u, f=f,
                      multiplier=np.full((M + 1,) + grid.shape, float(cfg.delta)),
                      kind="vi", iterations=sweeps, residuals=changes,
                      meta={"kkt_ok": bool(kkt_ok)})
    traj.multiplier = recover_multiplier(traj, cfg)
    log.info("VI run: %d steps, mean sweeps %.1f", M, float(np.mean(sweeps)))
    return traj


def recover_multiplier(traj, cfg):
    """Multiplier from the residual of the equation form.

    ``lambda = delta`` where ``|u| < 1 - contact_tol``; on contact nodes
    ``lambda = (r . u)/|u|^2`` with ``r = f - (u - u_prev)/tau + Delta_h u``.
    Nodes where ``lambda < delta - slack`` are counted in ``traj.meta``.
    """
    grid = traj.grid
    lam = np.full(traj.u.shape[:-1], float(cfg.delta))
    inside = grid.interior
    flagged = 0
    for m in range(1, traj.steps + 1):
        u = traj.u[m]
        r = traj.f[m] - (u - traj.u[m - 1]) / traj.tau - laplacian_apply(u, grid)
        mag2 = np.sum(u * u, axis=-1)
        contact = inside & (np.sqrt(mag2) >= 1.0 - cfg.contact_tol)
        lam[m][contact] = np.sum(r * u, axis=-1)[contact] / mag2[contact]
        flagged += int(np.sum(lam[m][contact] < cfg.delta - cfg.lambda_floor_slack))
    if flagged:
        log.warning("%d contact nodes with multiplier below delta", flagged)
    traj.meta["multiplier_flagged"] = flagged
    return lam


def variational_check(traj, rng, samples=100, steps=None, tol=1e-6):
    """Test the discrete VI against random admissible fields.

    For each checked level and sample ``v`` (a projected random field) the
    quantity ``<(u - u_prev)/tau, v - u> + <grad u, grad(v - u)>
    + delta <u, v - u> - <f, v - u>`` must be ``>= -tol * scale``.
    Returns the worst normalised value.
    """
    from .grid import inner, project_ball

    grid = traj.grid
    steps = range(1, traj.steps + 1) if steps is None else steps
    worst = math.inf
    for m in steps:
        u, up, f = traj.u[m], traj.u[m - 1], traj.f[m]
        op_u = (u - up) / traj.tau + laplacian_apply(u, grid) + traj.delta * u - f
        scale = max(1.0, math.sqrt(inner(op_u, op_u, grid)))
        for _ in range(samples):
            v = apply_dirichlet(project_ball(rng.normal(scale=0.7, size=u.shape)), grid)
            worst = min(worst, inner(op_u, v - u, grid) / scale)
    return {"worst": worst, "ok": worst >= -tol}
