import numpy as np
import pytest

_verdicts = pytest.StashKey[list]()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_configure(config):
    config.stash[_verdicts] = []


@pytest.fixture
def verdict(request):
    """Record one acceptance line and fail the test when ``ok`` is false."""
    lines = request.config.stash[_verdicts]

    def record(n, title, ok, detail):
        line = f"#{n:<2} {title:<38} {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append((n, line))
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_verdicts, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
