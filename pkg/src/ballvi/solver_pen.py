"""Implicit Euler for the penalised system.

Each step solves, at every interior node,

    (u - u_prev)/tau - Delta_h u + k(|u|^2 - 1) u = f(t_new)

for ``u``.  The default nonlinear iteration is damped Newton: the Jacobian
``(1/tau + k) I - Delta_h + 2 k' u u^T`` is SPD, and each step is the minimiser
of a strictly convex energy, so backtracking on that energy is globally
convergent.  The frozen-coefficient iteration (``method="picard"``) is kept for
mild penalties; it stops contracting once ``eps`` is small.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from .grid import apply_dirichlet, grad_sq_density, laplacian_apply, pointwise_norm, project_ball
from .linsolve import ConvergenceError, ShiftedOperator, cg_solve
from .penalty import PenaltyParams, k_eval, k_prime, k_primitive
from .trajectory import Trajectory

log = logging.getLogger(__name__)

# u0 may exceed the ball by this much from float noise; it is projected back
ADMISSIBLE_SLACK = 1e-12


class StepError(RuntimeError):
    def __init__(self, msg, step=None, residual=None):
        where = "" if step is None else f" at step {step}"
        super().__init__(f"{msg}{where}")
        self.step = step
        self.residual = residual


@dataclass
class PenRunConfig:
    penalty: PenaltyParams
    tau: float
    T: float
    fixed_point_tol: float = 1e-8
    fixed_point_max: int = 200
    theta: float = None
    method: str = "newton"
    cg_tol: float = 1e-10
    cg_max_iter: int = 20000

    def __post_init__(self):
        if self.tau <= 0.0:
            raise ValueError("tau must be positive")
        if self.T < self.tau * (1.0 - 1e-12):
            raise ValueError("T must be at least tau")
        if self.fixed_point_tol <= 0.0:
            raise ValueError("fixed_point_tol must be positive")
        if self.method not in ("newton", "picard"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.theta is None:
            self.theta = 0.5 if self.penalty.epsilon <= 1e-2 else 1.0
        if not 0.0 < self.theta <= 1.0:
            raise ValueError("theta must lie in (0, 1]")

    @property
    def steps(self):
        return num_steps(self.T, self.tau)


def num_steps(T, tau):
    return max(1, math.ceil(T / tau - 1e-9))


@dataclass
class StepResult:
    u: np.ndarray
    k: np.ndarray
    iterations: int
    residual: float


def _rhs_scale(u_prev, f_now, tau, grid):
    b = apply_dirichlet(f_now + u_prev / tau, grid)
    return max(np.linalg.norm(b), 1e-300)


def step_residual(u, u_prev, f_now, grid, tau, p):
    """Nodal residual of the implicit Euler equation (zero on the boundary)."""
    s = np.sum(u * u, axis=-1) - 1.0
    R = (u - u_prev) / tau + laplacian_apply(u, grid) + k_eval(s, p)[..., None] * u - f_now
    return apply_dirichlet(R, grid)


def step_energy(u, u_prev, f_now, grid, tau, p):
    """Convex functional whose minimiser is the implicit step (unweighted)."""
    inside = grid.interior
    s = np.sum(u * u, axis=-1) - 1.0
    du = u - u_prev
    local = (0.5 / tau) * np.sum(du * du, axis=-1) + 0.5 * k_primitive(s, p) - np.sum(f_now * u, axis=-1)
    return float(np.sum(local[inside])) + 0.5 * grad_sq_density(u, grid) / grid.cell_volume


def _newton(u_prev, f_now, grid, cfg):
    p, tau = cfg.penalty, cfg.tau
    scale = _rhs_scale(u_prev, f_now, tau, grid)
    u = apply_dirichlet(u_prev, grid)
    R = step_residual(u, u_prev, f_now, grid, tau, p)
    res = np.linalg.norm(R) / scale
    E = step_energy(u, u_prev, f_now, grid, tau, p)
    for it in range(1, cfg.fixed_point_max + 1):
        s = np.sum(u * u, axis=-1) - 1.0
        kp = k_prime(s, p)
        block = 2.0 * kp[..., None, None] * u[..., :, None] * u[..., None, :]
        op = ShiftedOperator(grid, tau, shift=k_eval(s, p), block=block)
        du = cg_solve(op, -R, tol=cfg.cg_tol, max_iter=cfg.cg_max_iter, precondition=True).u
        slope = float(np.vdot(R, du))
        alpha = 1.0
        while True:
            trial = u + alpha * du
            R_t = step_residual(trial, u_prev, f_now, grid, tau, p)
            res_t = np.linalg.norm(R_t) / scale
            E_t = step_energy(trial, u_prev, f_now, grid, tau, p)
            if E_t <= E + 1e-4 * alpha * slope + 1e-13 * abs(E) or res_t < res:
                break
            alpha *= 0.5
            if alpha < 1e-12:
                raise StepError("Newton line search stalled", residual=res)
        u_old, u = u, trial
        R, res, E = R_t, res_t, E_t
        change = np.linalg.norm(u - u_old)
        if change <= cfg.fixed_point_tol * np.linalg.norm(u_old) and res <= cfg.fixed_point_tol:
            return u, it, res
    raise StepError("Newton iteration did not converge", residual=res)


def _picard(u_prev, f_now, grid, cfg):
    p, tau, theta = cfg.penalty, cfg.tau, cfg.theta
    scale = _rhs_scale(u_prev, f_now, tau, grid)
    rhs = f_now + u_prev / tau
    u = apply_dirichlet(u_prev, grid)
    res = math.inf
    for it in range(1, cfg.fixed_point_max + 1):
        khat = k_eval(np.sum(u * u, axis=-1) - 1.0, p)
        op = ShiftedOperator(grid, tau, shift=khat)
        u_new = cg_solve(op, rhs, tol=cfg.cg_tol, max_iter=cfg.cg_max_iter).u
        u_old = u
        u = theta * u_new + (1.0 - theta) * u_old
        res = np.linalg.norm(step_residual(u, u_prev, f_now, grid, tau, p)) / scale
        if not np.isfinite(res):
            break
        change = np.linalg.norm(u - u_old)
        if change <= cfg.fixed_point_tol * np.linalg.norm(u_old) and res <= cfg.fixed_point_tol:
            return u, it, res
    raise StepError("frozen-coefficient iteration did not converge", residual=res)


def pen_step(u_prev, f_now, grid, cfg):
    """Advance one implicit Euler step of the penalised problem."""
    u_prev = np.asarray(u_prev, dtype=float)
    f_now = np.asarray(f_now, dtype=float)
    if not np.all(np.isfinite(u_prev)) or not np.all(np.isfinite(f_now)):
        raise ValueError("non-finite data passed to pen_step")
    solve = _newton if cfg.method == "newton" else _picard
    try:
        u, iters, res = solve(u_prev, f_now, grid, cfg)
    except ConvergenceError as exc:
        raise StepError(f"linear solve failed: {exc}", residual=exc.residual) from exc
    khat = k_eval(np.sum(u * u, axis=-1) - 1.0, cfg.penalty)
    assert np.all(khat >= cfg.penalty.delta)
    return StepResult(u, khat, iters, res)


def admissible_initial(u0, grid):
    """Zero the boundary and check ``|u0| <= 1``; tiny excess is projected."""
    u0 = apply_dirichlet(u0, grid)
    excess = float(np.max(pointwise_norm(u0))) - 1.0
    if excess > ADMISSIBLE_SLACK:
        raise ValueError(f"initial datum leaves the unit ball (max |u0| = {1.0 + excess:.6g})")
    if excess > 0.0:
        u0 = project_ball(u0)
    return u0


def sample_forcing(scenario, times):
    return np.stack([np.asarray(scenario.forcing(t), dtype=float) for t in times])


def pen_run(scenario, cfg):
    """Integrate the penalised problem over ``[0, M tau]``.

    ``scenario`` must provide ``grid``, ``initial()`` and ``forcing(t)``.
    """
    grid = scenario.grid
    u0 = admissible_initial(scenario.initial(), grid)
    M = cfg.steps
    times = cfg.tau * np.arange(M + 1)
    f = sample_forcing(scenario, times)
    u = np.empty((M + 1,) + u0.shape)
    k = np.empty((M + 1,) + grid.shape)
    u[0] = u0
    k[0] = k_eval(np.sum(u0 * u0, axis=-1) - 1.0, cfg.penalty)
    iters, resid = [], []
    for m in range(1, M + 1):
        try:
            step = pen_step(u[m - 1], f[m], grid, cfg)
        except StepError as exc:
            raise StepError(str(exc), step=m, residual=exc.residual) from exc
        u[m], k[m] = step.u, step.k
        iters.append(step.iterations)
        resid.append(step.residual)
    log.info("penalised run: %d steps, eps=%g, mean iterations %.2f",
             M, cfg.penalty.epsilon, float(np.mean(iters)))
    return Trajectory(grid=grid, tau=cfg.tau, delta=cfg.penalty.delta, times=times,
                      u=u, f=f, multiplier=k, kind="pen", iterations=iters,
                      residuals=resid, meta={"epsilon": cfg.penalty.epsilon,
                                             "method": cfg.method})


def extract_multiplier(traj):
    """The discrete multiplier of the penalised route is ``k_hat`` itself."""
    if traj.kind != "pen":
        raise ValueError("extract_multiplier expects a penalised trajectory")
    return traj.multiplier.copy()


def linear_run(scenario, tau, T, delta, cg_tol=1e-12):
    """Implicit Euler for ``u_t - Delta u + delta u = f`` without constraint."""
    grid = scenario.grid
    u0 = apply_dirichlet(scenario.initial(), grid)
    M = num_steps(T, tau)
    times = tau * np.arange(M + 1)
    f = sample_forcing(scenario, times)
    u = np.empty((M + 1,) + u0.shape)
    u[0] = u0
    op = ShiftedOperator(grid, tau, shift=delta)
    for m in range(1, M + 1):
        u[m] = cg_solve(op, f[m] + u[m - 1] / tau, tol=cg_tol).u
    return Trajectory(grid=grid, tau=tau, delta=delta, times=times, u=u, f=f,
                      multiplier=np.full((M + 1,) + grid.shape, float(delta)),
                      kind="linear")
