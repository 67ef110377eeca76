import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from spillnet import Panel  # noqa: E402


def make_dates(T, start="2000-01-01"):
    base = np.datetime64(start)
    return [str(base + np.timedelta64(k, "D")) for k in range(T)]


def make_panel(values, labels=None):
    values = np.asarray(values, dtype=float)
    labels = labels or [f"x{k}" for k in range(values.shape[1])]
    return Panel(labels, make_dates(values.shape[0]), values)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""
    def record(number, ok, detail):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE.append(line)
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
