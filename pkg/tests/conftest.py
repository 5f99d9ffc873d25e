import sys

import pytest

from mkdvlab.grid import Grid


@pytest.fixture(scope="session")
def grid_small():
    return Grid(60.0, 768)


@pytest.fixture(scope="session")
def grid_medium():
    return Grid(80.0, 1024)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if module is not None and module.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in module.RESULTS:
            terminalreporter.write_line(line)
