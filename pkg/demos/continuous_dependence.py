"""Stability of the VI solution map in the forcing.

Perturb f by g/n and watch the distance between solutions.  The left side of
the stability estimate (sup in time of the L2 gap plus the dissipated gradient
and delta terms) must stay under C^2/2 ||f_n - f||^2, and it shrinks like 1/n^2.
"""
from ballvi.experiments import dependence_study
from ballvi.scenario import DEPENDENCE_PERTURBATION, get_scenario

base = get_scenario("dependence-base")
report = dependence_study(base, DEPENDENCE_PERTURBATION, n_list=(1, 2, 4, 8))
print(report.table())
