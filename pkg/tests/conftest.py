import sys
import numpy as np
import pytest

from qgen.qmat import SubsystemShape


@pytest.fixture
def rng():
    return np.random.default_rng(20241019)


def shape(*pairs):
    """shape(("a", 2), ("b", 3)) -> SubsystemShape."""
    return SubsystemShape([p[0] for p in pairs], [p[1] for p in pairs])


def ket(*bits, d=2):
    v = np.zeros(d ** len(bits), dtype=complex)
    idx = 0
    for b in bits:
        idx = idx * d + b
    v[idx] = 1
    return v


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
