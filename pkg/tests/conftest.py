import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

ACCEPTANCE_LINES = []


@pytest.fixture
def record_criterion():
    """Record one acceptance line: (number, title, passed, detail)."""
    def record(num, title, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] AC{num:>2} {title}" + (f" -- {detail}" if detail else "")
        ACCEPTANCE_LINES.append((num, line))
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
