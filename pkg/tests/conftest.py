import time

import numpy as np
import pytest

from cavitylz.dynamics import integrate_first_order, integrate_second_order

RATIOS = (1 / 100, 1 / 500, 1 / 1000)
GRID = np.linspace(-25.0, 25.0, 2001)

_acceptance_lines = []


@pytest.fixture
def record_criterion():
    def record(label: str, passed: bool, detail: str):
        _acceptance_lines.append(f"[{'PASS' if passed else 'FAIL'}] criterion {label}: {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def first_order_run():
    return integrate_first_order(1.0, t_eval=GRID)


@pytest.fixture(scope="session")
def second_order_runs():
    """Rotated-frame second-order runs at theta~ = 1 for the three gap ratios, with wall time."""
    t0 = time.perf_counter()
    runs = {r: integrate_second_order(1.0, r, t_eval=GRID) for r in RATIOS}
    return runs, time.perf_counter() - t0
