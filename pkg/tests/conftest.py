import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def groundstate_m1():
    from snewton import RadialGrid, solve_groundstate

    grid = RadialGrid.from_extent(24.0, 1.0 / 32.0)
    return solve_groundstate(1.0, grid)


def pytest_configure(config):
    config.acceptance_lines = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line; the lines are repeated in the terminal summary."""

    def record(number: int, title: str, ok: bool, detail: str) -> bool:
        line = f"criterion {number} ({title}): {'PASS' if ok else 'FAIL'}  {detail}"
        request.config.acceptance_lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
