import pytest

from catenoid_mqm.catenoid import SystemParams

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def params():
    return SystemParams(hbar=1.0, mass=1.0, R=0.5)


@pytest.fixture
def record():
    """Collects one pass/fail line per acceptance criterion for the terminal summary."""

    def add(line: str) -> None:
        ACCEPTANCE_LINES.append(line)
        print(line)

    return add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
