from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from floquet_rabi.floquet import dressed_basis_for, solve
from floquet_rabi.hamiltonian import ModelParams

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture(scope="session")
def defaults() -> ModelParams:
    return ModelParams()


@pytest.fixture(scope="session")
def default_solution(defaults):
    return solve(defaults)


@pytest.fixture(scope="session")
def default_basis(defaults):
    return dressed_basis_for(defaults)


@pytest.fixture(scope="session")
def undriven() -> ModelParams:
    return ModelParams(eta_m=0.0)

