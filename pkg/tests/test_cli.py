import csv
import json
import os
import subprocess
import sys

import pytest

from ballvi.cli import main

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CONFIGS = os.path.join(ROOT, "configs")
GOLDEN = os.path.join(ROOT, "tests", "golden")


def write_cfg(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def zero_cfg(**study):
    cfg = {"scenario": {"dim": 1, "extents": [1.0], "nodes": [17], "N": 2, "T": 0.05,
                        "delta": 0.2, "f": ["0", "0"], "u0": ["0", "0"], "label": "zero"},
           "penalty": {"epsilon": 0.01, "delta0": 1.0},
           "solver": {"tau": 0.01, "fixed_point_tol": 1e-8, "pgs_tol": 1e-11, "theta": None,
                      "max_iters": 50}}
    if study:
        cfg["study"] = study
    return cfg


def test_missing_file_exit_1(tmp_path, capsys):
    missing = str(tmp_path / "nope.json")
    assert main(["run-pen", missing, "--out", str(tmp_path / "o")]) == 1
    assert missing in capsys.readouterr().err


@pytest.mark.parametrize("mutate,key", [
    (lambda c: c.update(extra={}), "extra"),
    (lambda c: c["scenario"].update(colour=1), "scenario.colour"),
    (lambda c: c["scenario"].pop("T"), "scenario.T"),
    (lambda c: c["scenario"].update(dim=2), "scenario.dim"),
    (lambda c: c["scenario"].update(f=["1"]), "scenario.f"),
    (lambda c: c["scenario"].update(u0=["2", "0"]), "scenario.u0"),
    (lambda c: c["scenario"].update(f=["1 +", "0"]), "scenario"),
    (lambda c: c["penalty"].update(epsilon=0.0), "penalty"),
])
def test_config_errors_exit_1(tmp_path, capsys, mutate, key):
    cfg = zero_cfg()
    mutate(cfg)
    assert main(["run-pen", write_cfg(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 1
    assert key in capsys.readouterr().err


def test_unknown_study_type_and_empty_list(tmp_path):
    out = str(tmp_path / "o")
    assert main(["study", write_cfg(tmp_path, zero_cfg(type="bogus")), "--out", out]) == 1
    assert main(["study", write_cfg(tmp_path, zero_cfg(type="epsilon", eps_list=[])), "--out", out]) == 1


def test_zero_data_run_pen(tmp_path, capsys):
    out = tmp_path / "o"
    cfg = zero_cfg()
    cfg["scenario"]["delta"] = 0.0
    assert main(["run-pen", write_cfg(tmp_path, cfg), "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert stdout.splitlines()[0].startswith("estimate")
    for name in os.listdir(out):
        if name.startswith("u_"):
            rows = list(csv.DictReader(open(out / name)))
            assert all(float(r["comp_0"]) == 0.0 and float(r["comp_1"]) == 0.0 for r in rows)
        if name.startswith("lambda_"):
            assert all(float(r["comp_0"]) == 0.0 for r in csv.DictReader(open(out / name)))
    audit = json.loads((out / "audit.json").read_text())
    assert audit["passed"] and all(r["measured"] == 0.0 for r in audit["records"])


def test_zero_data_run_vi(tmp_path):
    out = tmp_path / "o"
    assert main(["run-vi", write_cfg(tmp_path, zero_cfg()), "--out", str(out), "--seed", "5"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["variational_check"]["ok"] and manifest["seed"] == 5


def test_solver_failure_exit_2(tmp_path):
    cfg = zero_cfg()
    cfg["scenario"]["f"] = ["50", "0"]
    cfg["penalty"]["epsilon"] = 1e-3
    cfg["solver"]["max_iters"] = 1
    assert main(["run-pen", write_cfg(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 2


def test_audit_failure_exit_3(tmp_path):
    # delta = delta0 with zero data violates the stated k_l1 bound
    cfg = zero_cfg()
    cfg["scenario"]["delta"] = 1.0
    assert main(["run-pen", write_cfg(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 3


def run_cli(*args):
    return subprocess.run([sys.executable, "-m", "ballvi", *args], capture_output=True, text=True)


def test_golden_audit_and_byte_identical(tmp_path):
    cfg = os.path.join(CONFIGS, "saturating-1d.json")
    a, b = tmp_path / "a", tmp_path / "b"
    r1 = run_cli("run-pen", cfg, "--out", str(a))
    r2 = run_cli("run-pen", cfg, "--out", str(b))
    assert r1.returncode == 0 and r2.returncode == 0 and r1.stdout == r2.stdout
    assert r1.stderr == ""
    names = sorted(os.listdir(a))
    assert names == sorted(os.listdir(b))
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    with open(os.path.join(GOLDEN, "saturating-1d_audit.json"), "rb") as fh:
        assert (a / "audit.json").read_bytes() == fh.read()


def test_epsilon_study_cli(tmp_path):
    out = tmp_path / "o"
    cfg = os.path.join(CONFIGS, "study-epsilon-saturating-1d.json")
    assert main(["study", cfg, "--out", str(out), "--threads", "2"]) == 0
    rows = list(csv.DictReader(open(out / "saturating-1d_epsilon.csv")))
    assert len(rows) == 5
    assert json.loads((out / "saturating-1d_epsilon.json").read_text())["passed"]


def test_log_level_env(tmp_path):
    env = dict(os.environ, BALLVI_LOG="info")
    cfg = write_cfg(tmp_path, zero_cfg())
    r = subprocess.run([sys.executable, "-m", "ballvi", "run-pen", cfg, "--out", str(tmp_path / "o")],
                       capture_output=True, text=True, env=env)
    assert r.returncode == 0 and "INFO" in r.stderr and "INFO" not in r.stdout
