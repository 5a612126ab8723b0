from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"

# criterion id -> (passed, detail); filled by the acceptance tests
AC_RESULTS: dict[str, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture
def record_ac():
    def record(criterion: str, passed: bool, detail: str):
        AC_RESULTS[criterion] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not AC_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(AC_RESULTS, key=lambda k: int(k.split("-")[1])):
        passed, detail = AC_RESULTS[key]
        terminalreporter.write_line(f"{key} {'PASS' if passed else 'FAIL'}  {detail}")
