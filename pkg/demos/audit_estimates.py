"""Certify the a-priori estimates on a rotating forcing in 2D.

f(t) = 30 (cos 2 pi t, sin 2 pi t) drags the solution around the sphere.  The
bounds depend only on the data, so they are the same for every eps; the
measured norms must stay below them (2% slack) as eps shrinks.
"""
from ballvi.audit import audit_run
from ballvi.experiments import pen_config
from ballvi.scenario import get_scenario
from ballvi.solver_pen import pen_run

scenario = get_scenario("rotating-2d").with_changes(nodes=(33, 33))
for eps in (1e-1, 1e-2):
    traj = pen_run(scenario, pen_config(scenario, eps))
    report = audit_run(traj, scenario.delta0)
    print(f"eps={eps:g}: {'all bounds hold' if report.passed else 'FAILED'}")
    print(report.table())
    print()
