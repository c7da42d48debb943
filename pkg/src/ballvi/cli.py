"""``ballvi`` command line: run-pen, run-vi, study.

Exit codes: 0 success, 1 configuration error, 2 solver failure, 3 audit or
study assertion failure.  Diagnostics go to stderr; stdout carries only the
report table.
"""
import argparse
import json
import logging
import os
import sys

import numpy as np

from . import io
from .audit import audit_run, constraint_violation_l1
from .experiments import (DEFAULT_EPS, DEFAULT_N, dependence_study, epsilon_study,
                          multiplier_study, pen_config, vi_config)
from .expr import ExprError
from .linsolve import ConvergenceError
from .scenario import Scenario
from .solver_pen import StepError, extract_multiplier, pen_run
from .solver_vi import variational_check, vi_run

log = logging.getLogger("ballvi")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_AUDIT = 0, 1, 2, 3

SECTIONS = {
    "scenario": {"dim", "extents", "nodes", "N", "T", "delta", "f", "u0", "label"},
    "penalty": {"epsilon", "delta0"},
    "solver": {"tau", "fixed_point_tol", "pgs_tol", "theta", "max_iters", "method",
               "contact_tol", "pgs_max_sweeps", "snapshot_every"},
    "study": {"type", "eps_list", "n_list", "p_list", "perturbation"},
}
SCENARIO_REQUIRED = ("dim", "extents", "nodes", "N", "T", "delta", "f", "u0")
STUDY_TYPES = ("epsilon", "dependence", "multiplier")


class ConfigError(ValueError):
    pass


def load_config(path):
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be an object")
    for key, section in cfg.items():
        if key not in SECTIONS:
            raise ConfigError(f"unknown key '{key}'")
        if not isinstance(section, dict):
            raise ConfigError(f"'{key}' must be an object")
        for sub in section:
            if sub not in SECTIONS[key]:
                raise ConfigError(f"unknown key '{key}.{sub}'")
    return cfg


def _need(cfg, section, key):
    try:
        return cfg[section][key]
    except KeyError:
        raise ConfigError(f"missing required key '{section}.{key}'") from None


def build_scenario(cfg):
    if "scenario" not in cfg:
        raise ConfigError("missing required key 'scenario'")
    sc = {k: _need(cfg, "scenario", k) for k in SCENARIO_REQUIRED}
    extents, nodes = list(np.atleast_1d(sc["extents"])), list(np.atleast_1d(sc["nodes"]))
    if sc["dim"] not in (1, 2) or len(extents) != sc["dim"] or len(nodes) != sc["dim"]:
        raise ConfigError("'scenario.dim' must be 1 or 2 and match extents/nodes")
    for key in ("f", "u0"):
        if not isinstance(sc[key], list) or len(sc[key]) != sc["N"]:
            raise ConfigError(f"'scenario.{key}' must list N={sc['N']} expressions")
    delta0 = cfg.get("penalty", {}).get("delta0", max(1.0, float(sc["delta"])))
    try:
        scenario = Scenario(extents=tuple(extents), nodes=tuple(nodes), T=float(sc["T"]),
                            delta=float(sc["delta"]), f=tuple(sc["f"]), u0=tuple(sc["u0"]),
                            label=cfg["scenario"].get("label", "scenario"), delta0=float(delta0))
    except ExprError as exc:
        raise ConfigError(f"'scenario' expression error: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"'scenario': {exc}") from None
    if not scenario.initial_is_admissible():
        raise ConfigError("'scenario.u0' leaves the unit ball")
    return scenario


def solver_options(cfg):
    s = cfg.get("solver", {})
    pen = {}
    if "fixed_point_tol" in s:
        pen["fixed_point_tol"] = float(s["fixed_point_tol"])
    if "max_iters" in s:
        pen["fixed_point_max"] = int(s["max_iters"])
    if s.get("theta") is not None:
        pen["theta"] = float(s["theta"])
    if "method" in s:
        pen["method"] = s["method"]
    vi = {}
    if "pgs_tol" in s:
        vi["pgs_tol"] = float(s["pgs_tol"])
    if "pgs_max_sweeps" in s:
        vi["pgs_max_sweeps"] = int(s["pgs_max_sweeps"])
    if "contact_tol" in s:
        vi["contact_tol"] = float(s["contact_tol"])
    return s.get("tau"), pen, vi


def p_list_of(cfg):
    return tuple(cfg.get("study", {}).get("p_list", (1, 2, 4)))


def _finish_run(traj, scenario, cfg, out_dir, extra):
    every = int(cfg.get("solver", {}).get("snapshot_every", 1))
    manifest = io.write_trajectory(out_dir, traj, every=every)
    report = audit_run(traj, scenario.delta0, p_list_of(cfg))
    io.write_json(os.path.join(out_dir, "audit.json"), report.to_dict())
    manifest.update(extra)
    manifest["scenario"] = scenario.to_dict()
    manifest["audit_passed"] = report.passed
    io.write_json(os.path.join(out_dir, "manifest.json"), manifest)
    print(report.table())
    return EXIT_OK if report.passed and extra.get("checks_ok", True) else EXIT_AUDIT


def cmd_run_pen(config_path, out_dir, threads=0, seed=0):
    cfg = load_config(config_path)
    scenario = build_scenario(cfg)
    eps = _need(cfg, "penalty", "epsilon")
    tau, pen_opts, _ = solver_options(cfg)
    try:
        run_cfg = pen_config(scenario, float(eps), tau, **pen_opts)
    except ValueError as exc:
        raise ConfigError(f"'penalty'/'solver': {exc}") from None
    traj = pen_run(scenario, run_cfg)
    traj.multiplier = extract_multiplier(traj)
    viol = constraint_violation_l1(traj)
    k_l1 = float(np.sum(traj.grid.weights * traj.levels("multiplier")) * traj.tau)
    bound = run_cfg.penalty.epsilon * (scenario.grid.volume * traj.horizon + k_l1) + 1e-6
    extra = {"constraint_violation_l1": viol, "constraint_violation_bound": bound,
             "checks_ok": viol <= bound}
    return _finish_run(traj, scenario, cfg, out_dir, extra)


def cmd_run_vi(config_path, out_dir, threads=0, seed=0):
    cfg = load_config(config_path)
    scenario = build_scenario(cfg)
    tau, _, vi_opts = solver_options(cfg)
    try:
        run_cfg = vi_config(scenario, tau, **vi_opts)
    except ValueError as exc:
        raise ConfigError(f"'solver': {exc}") from None
    traj = vi_run(scenario, run_cfg)
    rng = np.random.default_rng(seed)
    M = traj.steps
    check = variational_check(traj, rng, samples=100, steps=sorted({1, max(1, M // 2), M}))
    extra = {"variational_check": check, "seed": seed,
             "checks_ok": check["ok"] and traj.meta["kkt_ok"]}
    return _finish_run(traj, scenario, cfg, out_dir, extra)


def cmd_study(config_path, out_dir, threads=0, seed=0):
    cfg = load_config(config_path)
    scenario = build_scenario(cfg)
    kind = _need(cfg, "study", "type")
    if kind not in STUDY_TYPES:
        raise ConfigError(f"'study.type' must be one of {STUDY_TYPES}, got {kind!r}")
    tau, pen_opts, vi_opts = solver_options(cfg)
    study = cfg["study"]
    if kind == "epsilon":
        eps_list = study.get("eps_list", list(DEFAULT_EPS))
        if not eps_list:
            raise ConfigError("'study.eps_list' is empty")
        try:
            report = epsilon_study(scenario, eps_list, p_list_of(cfg), tau, pen_opts, vi_opts, threads)
        except ValueError as exc:
            raise ConfigError(f"'study.eps_list': {exc}") from None
    elif kind == "dependence":
        n_list = study.get("n_list", list(DEFAULT_N))
        if not n_list:
            raise ConfigError("'study.n_list' is empty")
        g = _need(cfg, "study", "perturbation")
        if len(g) != scenario.ncomp:
            raise ConfigError("'study.perturbation' needs one expression per component")
        try:
            from .expr import parse
            for s in g:
                parse(s)
        except ExprError as exc:
            raise ConfigError(f"'study.perturbation': {exc}") from None
        report = dependence_study(scenario, tuple(g), n_list, tau, vi_opts, threads=threads)
    else:
        eps_list = study.get("eps_list") or [cfg.get("penalty", {}).get("epsilon", 1e-3)]
        report = multiplier_study(scenario, float(min(eps_list)), tau, pen_opts, vi_opts,
                                  p_list_of(cfg))
    report.write(out_dir)
    print(report.table())
    return EXIT_OK if report.passed else EXIT_AUDIT


COMMANDS = {"run-pen": cmd_run_pen, "run-vi": cmd_run_vi, "study": cmd_study}


def make_parser():
    ap = argparse.ArgumentParser(prog="ballvi", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("config")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--threads", type=int, default=0, help="0 = sequential")
        sp.add_argument("--seed", type=int, default=0)
    return ap


def main(argv=None):
    args = make_parser().parse_args(argv)
    level = os.environ.get("BALLVI_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args.config, args.out, args.threads, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StepError, ConvergenceError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
