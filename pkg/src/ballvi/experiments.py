"""Scripted studies: eps -> 0 convergence, multiplier agreement, dependence.

Each study embeds the audit report of every constituent run and fails if any
of them fails.
"""
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import io
from .audit import audit_run, complementarity_l1, constraint_violation_l1
from .grid import grad_sq_density, l2_sq, lp_norm_spacetime, pointwise_norm
from .penalty import PenaltyParams
from .solver_pen import PenRunConfig, pen_run
from .solver_vi import ViRunConfig, vi_run

log = logging.getLogger(__name__)

MONOTONE_SLACK = 0.05
# absolute floor for the monotonicity checks, below which values are noise
NOISE_FLOOR = 1e-9
DEFAULT_EPS = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
DEFAULT_N = (1, 2, 4, 8, 16)


@dataclass
class StudyReport:
    kind: str
    label: str
    columns: list
    rows: list
    verdicts: dict
    audits: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    runs: dict = field(default_factory=dict, repr=False)

    @property
    def passed(self):
        return all(self.verdicts.values()) and all(a.passed for a in self.audits)

    def column(self, name):
        return [row[name] for row in self.rows]

    def table(self):
        widths = [max(14, len(c) + 2) for c in self.columns]
        lines = ["".join(f"{c:>{w}}" for c, w in zip(self.columns, widths))]
        for row in self.rows:
            lines.append("".join(f"{row[c]:>{w}.6e}" if isinstance(row[c], float)
                                 else f"{row[c]!s:>{w}}" for c, w in zip(self.columns, widths)))
        lines += [f"{k}: {'pass' if v else 'FAIL'}" for k, v in self.verdicts.items()]
        return "\n".join(lines)

    def manifest(self):
        return {"kind": self.kind, "label": self.label, "passed": self.passed,
                "verdicts": self.verdicts, "columns": self.columns, "rows": self.rows,
                "audits": [a.to_dict() for a in self.audits], "extra": self.extra}

    def write(self, out_dir):
        os.makedirs(out_dir, exist_ok=True)
        stem = f"{self.label}_{self.kind}"
        io.write_table_csv(os.path.join(out_dir, stem + ".csv"), self.rows, self.columns)
        io.write_json(os.path.join(out_dir, stem + ".json"), self.manifest())
        return stem


def nonincreasing(values, slack=MONOTONE_SLACK, floor=NOISE_FLOOR):
    return all(b <= (1.0 + slack) * a + floor for a, b in zip(values, values[1:]))


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def pen_config(scenario, epsilon, tau=None, **kw):
    tau = tau or scenario.T / 200
    return PenRunConfig(PenaltyParams(epsilon, scenario.delta, scenario.delta0),
                        tau=tau, T=scenario.T, **kw)


def vi_config(scenario, tau=None, **kw):
    tau = tau or scenario.T / 200
    return ViRunConfig(scenario.delta, tau, scenario.T, **kw)


def l2_difference(a, b):
    """``||u_a - u_b||_{L2(Q_T)}`` over levels ``1..M``."""
    return lp_norm_spacetime(list(a.levels("u") - b.levels("u")), a.tau, 2, a.grid)


def multiplier_uniqueness_check(traj_pen, traj_vi, contact_tol=1e-6):
    """Compare the two multipliers on the common inactive set and on contact.

    The common inactive set is where both routes have ``|u| < 1 - contact_tol``;
    there both multipliers must equal ``delta``.
    """
    grid = traj_vi.grid
    inside = grid.interior[None]
    lam_p, lam_v = traj_pen.levels("multiplier"), traj_vi.levels("multiplier")
    mag_p = pointwise_norm(traj_pen.levels("u"))
    mag_v = pointwise_norm(traj_vi.levels("u"))
    free_p = mag_p < 1.0 - contact_tol
    free_v = mag_v < 1.0 - contact_tol
    both = inside & free_p & free_v
    delta = traj_vi.delta
    inactive_dev = float(max(np.max(np.abs(lam_p - delta)[both], initial=0.0),
                             np.max(np.abs(lam_v - delta)[both], initial=0.0),
                             np.max(np.abs(lam_p - lam_v)[both], initial=0.0)))
    contact = inside & ~free_v
    diff = np.abs(lam_p - lam_v)
    tau = traj_vi.tau
    contact_l1 = lp_norm_spacetime(list(np.where(contact, diff, 0.0)), tau, 1, grid)
    return {
        "inactive_max_deviation": inactive_dev,
        "inactive_agree": inactive_dev <= 1e-8,
        "contact_l1_discrepancy": contact_l1,
        "total_l1_discrepancy": lp_norm_spacetime(list(diff), tau, 1, grid),
        "set_mismatch_nodes": int(np.sum(inside & (free_p != free_v))),
        "min_lambda_pen": float(np.min(lam_p[np.broadcast_to(inside, lam_p.shape)])),
        "min_lambda_vi": float(np.min(lam_v[np.broadcast_to(inside, lam_v.shape)])),
    }


def epsilon_study(scenario, eps_list=DEFAULT_EPS, p_list=(1, 2, 4), tau=None,
                  pen_opts=None, vi_opts=None, threads=0, runs=None):
    """Penalised runs along a decreasing ``eps_list`` against the VI reference.

    ``runs`` may carry precomputed trajectories keyed by eps (and ``"vi"``).
    """
    eps_list = list(eps_list)
    if not eps_list:
        raise ValueError("eps_list is empty")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    runs = dict(runs or {})
    if "vi" not in runs:
        runs["vi"] = vi_run(scenario, vi_config(scenario, tau, **(vi_opts or {})))
    ref = runs["vi"]
    todo = [e for e in eps_list if e not in runs]
    for e, tr in zip(todo, _map(lambda e: pen_run(scenario, pen_config(scenario, e, tau, **(pen_opts or {}))),
                                todo, threads)):
        runs[e] = tr

    rows, audits = [], [audit_run(ref, scenario.delta0, p_list)]
    Q = scenario.grid.volume * ref.horizon
    for e in eps_list:
        tr = runs[e]
        rep = audit_run(tr, scenario.delta0, p_list)
        audits.append(rep)
        k_l1 = rep.record("k_l1").measured
        row = {
            "epsilon": e,
            "err_l2": l2_difference(tr, ref),
            "violation_l1": constraint_violation_l1(tr),
            "violation_bound": e * (Q + k_l1),
            "complementarity_l1": complementarity_l1(tr),
            "multiplier_l1_diff": lp_norm_spacetime(
                list(tr.levels("multiplier") - ref.levels("multiplier")), tr.tau, 1, tr.grid),
            "audit": "pass" if rep.passed else "FAIL",
        }
        for p in p_list:
            row[f"k_l{p:g}"] = rep.record(f"k_lp[p={p:g}]").measured
            row[f"k_l{p:g}_bound"] = rep.record(f"k_lp[p={p:g}]").bound
        rows.append(row)
    columns = list(rows[0])
    comp = [r["complementarity_l1"] for r in rows]
    verdicts = {
        "err_l2_nonincreasing": nonincreasing([r["err_l2"] for r in rows]),
        "violation_nonincreasing": nonincreasing([r["violation_l1"] for r in rows]),
        "violation_within_bound": all(r["violation_l1"] <= r["violation_bound"] + 1e-6 for r in rows),
        "complementarity_halved": comp[-1] <= 0.5 * comp[0] + NOISE_FLOOR,
    }
    uniq = multiplier_uniqueness_check(runs[eps_list[-1]], ref)
    return StudyReport("epsilon", scenario.label, columns, rows, verdicts, audits,
                       extra={"vi_complementarity_l1": complementarity_l1(ref),
                              "multiplier_uniqueness": uniq},
                       runs=runs)


def perturbed(scenario, g, n):
    f = tuple(f"({fi}) + ({gi})/({n})" for fi, gi in zip(scenario.f, g))
    return scenario.with_changes(f=f, label=f"{scenario.label}-n{n}")


def stability_sides(traj_n, traj, C):
    """Per-level left and right sides of the continuous-dependence estimate."""
    grid, tau, delta = traj.grid, traj.tau, traj.delta
    z = traj_n.u - traj.u
    df = traj_n.f - traj.f
    rhs0 = 0.5 * l2_sq(z[0], grid)
    lhs, rhs = [], []
    acc_l = acc_r = 0.0
    for m in range(1, traj.steps + 1):
        acc_l += tau * (0.5 * grad_sq_density(z[m], grid) + delta * l2_sq(z[m], grid))
        acc_r += tau * 0.5 * C**2 * l2_sq(df[m], grid)
        lhs.append(0.5 * l2_sq(z[m], grid) + acc_l)
        rhs.append(acc_r + rhs0)
    return np.array(lhs), np.array(rhs)


def multiplier_study(scenario, epsilon, tau=None, pen_opts=None, vi_opts=None, p_list=(1, 2, 4)):
    """Single-eps comparison of the penalised and VI multipliers."""
    pen = pen_run(scenario, pen_config(scenario, epsilon, tau, **(pen_opts or {})))
    vopts = dict(vi_opts or {})
    ref = vi_run(scenario, vi_config(scenario, tau, **vopts))
    uniq = multiplier_uniqueness_check(pen, ref, vopts.get("contact_tol", 1e-6))
    row = {"epsilon": epsilon, **{k: v for k, v in uniq.items() if k != "inactive_agree"},
           "complementarity_pen": complementarity_l1(pen),
           "complementarity_vi": complementarity_l1(ref)}
    verdicts = {"inactive_agree": uniq["inactive_agree"],
                "floor_pen": uniq["min_lambda_pen"] >= scenario.delta - 1e-6,
                "floor_vi": uniq["min_lambda_vi"] >= scenario.delta - 1e-6}
    audits = [audit_run(pen, scenario.delta0, p_list), audit_run(ref, scenario.delta0, p_list)]
    return StudyReport("multiplier", scenario.label, list(row), [row], verdicts, audits,
                       runs={"pen": pen, "vi": ref})


def dependence_study(base, g, n_list=DEFAULT_N, tau=None, vi_opts=None,
                     slack=0.02, threads=0, base_run=None):
    """VI runs with ``f_n = f + g/n`` (same ``u0``) against the base run."""
    from .grid import poincare_constant

    n_list = list(n_list)
    if not n_list:
        raise ValueError("n_list is empty")
    cfg = vi_config(base, tau, **(vi_opts or {}))
    ref = base_run if base_run is not None else vi_run(base, cfg)
    trajs = _map(lambda n: vi_run(perturbed(base, g, n), cfg), n_list, threads)
    C = poincare_constant(base.grid)
    rows, audits = [], [audit_run(ref, base.delta0)]
    for n, tr in zip(n_list, trajs):
        audits.append(audit_run(tr, base.delta0))
        lhs, rhs = stability_sides(tr, ref, C)
        rows.append({
            "n": n,
            "lhs_sup": float(lhs.max()),
            "rhs_final": float(rhs[-1]),
            "max_ratio": float(np.max(lhs / np.maximum(rhs, 1e-300))) if rhs[-1] > 0 else 0.0,
            "holds": bool(np.all(lhs <= (1.0 + slack) * rhs + 1e-14)),
            "z_linf_l2": math.sqrt(max(l2_sq(z, ref.grid) for z in tr.u - ref.u)),
        })
    base_lhs = rows[0]["lhs_sup"]
    for row in rows:
        scale = (row["n"] / rows[0]["n"]) ** 2
        row["decay_ratio"] = row["lhs_sup"] * scale / base_lhs if base_lhs > 0 else 0.0
    verdicts = {
        "stability_holds": all(r["holds"] for r in rows),
        "decay_like_inverse_square": all(0.25 <= r["decay_ratio"] <= 4.0 for r in rows)
        if base_lhs > 0 else all(r["lhs_sup"] <= 1e-14 for r in rows),
    }
    return StudyReport("dependence", base.label, list(rows[0]), rows, verdicts, audits,
                       extra={"perturbation": list(g)},
                       runs={"base": ref, **dict(zip(n_list, trajs))})


def contraction_check(scenario, u0_alt, tau=None, vi_opts=None):
    """Two VI runs differing only in ``u0``: returns per-level ``||z||`` and slack."""
    cfg = vi_config(scenario, tau, **(vi_opts or {}))
    a = vi_run(scenario, cfg)
    b = vi_run(scenario.with_changes(u0=tuple(u0_alt), label=scenario.label + "-alt"), cfg)
    z = [math.sqrt(l2_sq(x, scenario.grid)) for x in a.u - b.u]
    return {"z_norms": z, "max_excess": max(zn - z[0] for zn in z[1:]),
            "holds": all(zn <= z[0] + 1e-8 for zn in z[1:])}
