"""CSV snapshots and JSON manifests.

Floats are written with 17 significant digits so files round-trip exactly
and repeated runs are byte-identical.
"""
import csv
import json
import os

import numpy as np


def fmt(x):
    return format(float(x), ".17g")


def field_rows(field, grid):
    """Rows ``x[, y], comp_0, ..., comp_{N-1}`` in C order over the nodes."""
    field = np.asarray(field, dtype=float)
    if field.ndim == grid.dim:
        field = field[..., None]
    X, Y = grid.coords()
    coords = [X.ravel()] if grid.dim == 1 else [X.ravel(), Y.ravel()]
    vals = field.reshape(-1, field.shape[-1])
    for idx in range(vals.shape[0]):
        yield [fmt(c[idx]) for c in coords] + [fmt(v) for v in vals[idx]]


def write_field_csv(path, field, grid):
    field = np.asarray(field)
    ncomp = 1 if field.ndim == grid.dim else field.shape[-1]
    header = ["x", "y"][: grid.dim] + [f"comp_{i}" for i in range(ncomp)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(field_rows(field, grid))


def read_field_csv(path, grid):
    """Inverse of ``write_field_csv``; returns the nodal values array."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    vals = body[:, grid.dim:]
    ncomp = len(header) - grid.dim
    return vals.reshape(grid.shape + (ncomp,))


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(fmt(obj))
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def dumps(obj):
    """Deterministic JSON with 17-digit floats."""
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=True) + "\n"


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(obj))


def write_trajectory(out_dir, traj, every=1):
    """One CSV per saved level for ``u`` and the multiplier, plus a manifest."""
    os.makedirs(out_dir, exist_ok=True)
    saved = []
    for m in range(0, traj.steps + 1):
        if m % every and m != traj.steps:
            continue
        u_name = f"u_{m:05d}.csv"
        lam_name = f"lambda_{m:05d}.csv"
        write_field_csv(os.path.join(out_dir, u_name), traj.u[m], traj.grid)
        write_field_csv(os.path.join(out_dir, lam_name), traj.multiplier[m], traj.grid)
        saved.append({"step": m, "time": traj.times[m], "u": u_name, "lambda": lam_name})
    manifest = {
        "kind": traj.kind,
        "tau": traj.tau,
        "delta": traj.delta,
        "steps": traj.steps,
        "grid": {"extents": list(traj.grid.extents), "nodes": list(traj.grid.nodes)},
        "components": int(traj.u.shape[-1]),
        "snapshots": saved,
        "iterations": [int(i) for i in traj.iterations],
        "residuals": list(traj.residuals),
        "meta": traj.meta,
    }
    write_json(os.path.join(out_dir, "manifest.json"), manifest)
    return manifest


def write_table_csv(path, rows, columns):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(row[c]) if isinstance(row[c], (float, np.floating)) else row[c]
                        for c in columns])
