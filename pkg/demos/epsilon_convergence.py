"""Penalised solutions approach the constrained one as eps -> 0.

A constant push f = (12, 0) on (0, 1) would drive the unconstrained solution
above |u| = 1 in the middle of the interval.  The VI solution sits on the
sphere there.  We run the penalised problem along a decreasing eps ladder and
report the space-time L2 distance to the VI run, the constraint violation and
the complementarity residual.

Usage: python3 demos/epsilon_convergence.py [out_dir]
"""
import sys

from ballvi.experiments import epsilon_study
from ballvi.scenario import get_scenario

scenario = get_scenario("saturating-1d")
report = epsilon_study(scenario, eps_list=(1e-1, 1e-2, 1e-3))
print(report.table())

errs = report.column("err_l2")
for a, b, e in zip(errs, errs[1:], (1e-2, 1e-3)):
    print(f"eps -> {e:g}: error shrinks by {a / b:.2f}x")

if len(sys.argv) > 1:
    print("wrote", report.write(sys.argv[1]))
