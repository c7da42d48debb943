"""Penalisation and projected relaxation for a parabolic VI on the unit ball."""
from .audit import audit_run
from .experiments import dependence_study, epsilon_study, multiplier_uniqueness_check
from .grid import Grid, laplacian_apply, lp_norm_spacetime, poincare_constant, project_ball
from .penalty import PenaltyParams, k_eval, phi_apply, psi_eval
from .scenario import CATALOG, Scenario, get_scenario
from .solver_pen import PenRunConfig, extract_multiplier, pen_run, pen_step
from .solver_vi import ViRunConfig, recover_multiplier, vi_run, vi_step

__version__ = "0.1.0"
