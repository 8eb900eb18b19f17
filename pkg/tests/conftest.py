import contextlib

import mpmath
import pytest


@pytest.fixture(autouse=True)
def working_precision():
    # every test runs at the library default of 50 digits
    with mpmath.mp.workdps(50):
        yield


def pytest_configure(config):
    config._criteria = {}


@pytest.fixture
def criterion(request):
    """Record the outcome of one acceptance criterion for the summary block."""
    results = request.config._criteria

    @contextlib.contextmanager
    def record(number: int, title: str):
        detail = []
        try:
            yield detail
        except BaseException:
            results[number] = (False, title, detail)
            raise
        results[number] = (True, title, detail)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_criteria", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        ok, title, detail = results[number]
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += "  [" + "; ".join(detail) + "]"
        terminalreporter.write_line(line)
