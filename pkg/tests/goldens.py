"""Fixed runs whose outputs are frozen under tests/golden."""
from ballvi.experiments import epsilon_study, pen_config
from ballvi.scenario import Scenario
from ballvi.solver_pen import pen_run

from conftest import cached_pen, cached_vi

# a compact 2D case where the constant push saturates the interior
SATURATING_2D = Scenario((1.0, 1.0), (17, 17), 0.2, 0.1, ("30", "0"), ("0", "0"),
                         label="saturating-2d")


def saturating_2d_run():
    return pen_run(SATURATING_2D, pen_config(SATURATING_2D, 1e-2, 0.01))


def saturating_epsilon_study():
    from ballvi.scenario import get_scenario

    eps = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
    runs = {e: cached_pen("saturating-1d", e) for e in eps}
    runs["vi"] = cached_vi("saturating-1d")
    return epsilon_study(get_scenario("saturating-1d"), eps, runs=runs)
