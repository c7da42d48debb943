"""The two routes to a Lagrange multiplier.

The penalised route reads lambda off as k(|u|^2 - 1); the VI route recovers it
from the residual of the equation on contact nodes.  Both equal delta where
the constraint is slack.  On contact they agree up to an O(eps) offset, and the
complementarity product (lambda - delta)(|u| - 1) is what separates them:
exactly zero for the VI, of order eps * lambda * log(lambda) for the penalty.
"""
import numpy as np

from ballvi.audit import complementarity_l1
from ballvi.experiments import multiplier_study
from ballvi.grid import pointwise_norm
from ballvi.scenario import get_scenario

scenario = get_scenario("saturating-1d")
for eps in (1e-2, 1e-3):
    rep = multiplier_study(scenario, eps)
    row = rep.rows[0]
    print(f"eps={eps:g}: contact L1 gap {row['contact_l1_discrepancy']:.4f}, "
          f"complementarity pen {row['complementarity_pen']:.2e} vs vi {row['complementarity_vi']:.2e}")

vi = rep.runs["vi"]
mid = vi.grid.shape[0] // 2
print("at the midpoint, final time:")
print(f"  |u| = {pointwise_norm(vi.u[-1])[mid]:.12f}, lambda_vi = {vi.multiplier[-1, mid]:.4f}, "
      f"lambda_pen = {rep.runs['pen'].multiplier[-1, mid]:.4f}")
print(f"  nodes in contact at T: {int(np.sum(pointwise_norm(vi.u[-1]) >= 1 - 1e-6))}")
