import math

import numpy as np
import pytest

from pctate.did import NEVER, PanelData


def default_tau(c, r):
    return 0.02 * (r + 1) + 0.01 * (c - 3) if r >= 0 else 0.0


def make_panel(seed, n_units=200, periods=8, cohorts=(3, 5, 7), tau=default_tau, sigma=0.1):
    """Balanced panel with parallel trends; units split evenly over cohorts plus never-treated."""
    rng = np.random.default_rng(seed)
    groups = list(cohorts) + [NEVER]
    unit_cohort = np.array([groups[i % len(groups)] for i in range(n_units)], dtype=float)
    alpha = rng.normal(0.0, 0.5, n_units)
    gamma = np.cumsum(rng.normal(0.05, 0.05, periods))
    unit = np.repeat(np.arange(n_units), periods)
    time = np.tile(np.arange(1, periods + 1), n_units)
    cohort = unit_cohort[unit]
    effect = np.array(
        [tau(int(c), int(t - c)) if math.isfinite(c) else 0.0 for c, t in zip(cohort, time)]
    )
    log_y = 1.0 + alpha[unit] + gamma[time - 1] + effect + rng.normal(0.0, sigma, unit.size)
    return PanelData(unit, time, cohort, np.exp(log_y))


@pytest.fixture
def panel_factory():
    return make_panel


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
