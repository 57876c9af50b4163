import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from jang_penrose import solver  # noqa: E402
from jang_penrose.data import build_builtin  # noqa: E402

settings.register_profile(
    "default", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def schw():
    return build_builtin("schwarzschild-static", {"M": 1.0})


@pytest.fixture(scope="session")
def pg():
    return build_builtin("painleve-gullstrand", {"M": 1.0})


@pytest.fixture(scope="session")
def bumped():
    return build_builtin("bumped-conformal", {"M": 1.0, "eps": 0.01})


@pytest.fixture(scope="session")
def shell():
    return build_builtin("trapped-shell", {"truncate": True})


@pytest.fixture(scope="session")
def schw_sol(schw):
    return solver.solve(schw)


@pytest.fixture(scope="session")
def pg_sol(pg):
    return solver.solve(pg)


@pytest.fixture(scope="session")
def bumped_sol(bumped):
    return solver.solve(bumped)


@pytest.fixture(scope="session")
def shell_sol(shell):
    return solver.solve(shell)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.LINES:
        terminalreporter.write_line(line)
