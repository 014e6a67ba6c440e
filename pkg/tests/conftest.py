import os

import numpy as np
import pytest

from baroflux.harness.build import build_problem, initial_state
from baroflux.harness.scenarios import get_scenario


def pytest_configure(config):
    os.environ.setdefault("BAROFLUX_OUT", str(config.rootpath / ".pytest_out"))


def scenario_problem(name, **overrides):
    return build_problem(get_scenario(name, **overrides))


def scenario_state(name, backend=None, **overrides):
    problem = scenario_problem(name, **overrides)
    disc = problem.discretization(backend)
    return problem, disc, initial_state(problem, disc)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
