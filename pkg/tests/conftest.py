"""Shared, cached solver runs so expensive trajectories are computed once."""
from functools import lru_cache

import pytest

from ballvi.experiments import pen_config, vi_config
from ballvi.scenario import get_scenario
from ballvi.solver_pen import pen_run
from ballvi.solver_vi import vi_run

SHIPPED = ("inactive-1d", "saturating-1d", "rotating-2d", "dependence-base")
SHIPPED_EPS = (1e-1, 1e-2, 1e-3)


@lru_cache(maxsize=None)
def cached_pen(label, eps):
    sc = get_scenario(label)
    return pen_run(sc, pen_config(sc, eps))


@lru_cache(maxsize=None)
def cached_vi(label):
    sc = get_scenario(label)
    return vi_run(sc, vi_config(sc))


@pytest.fixture(scope="session")
def pen_runs():
    return cached_pen


@pytest.fixture(scope="session")
def vi_runs():
    return cached_vi


_CRITERIA = []


@pytest.fixture
def criterion(capsys):
    """Call ``criterion(n, ok, detail)`` to record and print one verdict line."""
    def report(n, ok, detail):
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _CRITERIA.append((n, line))
        with capsys.disabled():
            print("\n" + line)
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_CRITERIA):
            terminalreporter.write_line(line)
