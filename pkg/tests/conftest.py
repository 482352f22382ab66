import numpy as np
import pytest

from gdnls.grid import Grid

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def grid():
    return Grid(80 * np.pi, 4096)


@pytest.fixture(scope="session")
def small_grid():
    return Grid(40 * np.pi, 1024)


@pytest.fixture
def record():
    """Register an acceptance criterion outcome before asserting it."""

    def _record(number: int, passed: bool, detail: str) -> bool:
        ACCEPTANCE[number] = (bool(passed), detail)
        return bool(passed)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
