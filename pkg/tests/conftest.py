import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from v2xprop.mobility import GridSpec, generate_grid  # noqa: E402


@pytest.fixture(scope="session")
def small_grid():
    spec = GridSpec(map_side=800, vehicle_count=25, seed=7)
    env, vehicles = generate_grid(spec)
    return spec, env, vehicles


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
