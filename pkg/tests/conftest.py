import sys
from pathlib import Path

import pytest

TESTS = Path(__file__).parent
sys.path.insert(0, str(TESTS))

NETLIB = TESTS / "data" / "netlib"

# known optimal objective values
NETLIB_OPTIMA = {
    "recipe": -266.616,
    "scsd1": 8.666667,
    "sctap1": 1412.25,
    "lotfi": -25.264706,
    "e226": -18.751929,
    "grow7": -47787812,
    "scsd6": 50.5,
    "ship04s": 1798714.7,
}


@pytest.fixture
def netlib_dir() -> Path:
    return NETLIB


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
