import numpy as np
import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record a one-line criterion verdict, printed in the terminal summary."""
    def _report(name, ok, detail=""):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}".rstrip())
        print(ACCEPTANCE_LINES[-1])
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
