import os
import sys
import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

from astar.cli import bundled_config  # noqa: E402
from astar.config import load_config  # noqa: E402
from astar.solver import fixed_point_solve  # noqa: E402

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def weakstar_config():
    return load_config(bundled_config("weakstar.cfg"))


@pytest.fixture(scope="session")
def weakstar_run(weakstar_config):
    """Converged bundled weak-field rotating star (shared by several tests)."""
    cfg = weakstar_config
    history = []
    t0 = time.perf_counter()
    state, report = fixed_point_solve(cfg.grid(), cfg.eos(), cfg.constants(), cfg.solver_options(), cfg.omega(),
                                      callback=lambda s, e: history.append(dict(e)))
    return state, report, history, time.perf_counter() - t0


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
