import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qasbse.instances import build_nrp  # noqa: E402


@pytest.fixture
def toy_nrp():
    """Two requirements (costs 1, 2); customer 1 pays 3 for r1, customer 2 pays 4 for r2."""
    return build_nrp("toy", [1, 2], [(3, [0]), (4, [1])], [])


@pytest.fixture
def tiny_nrp():
    """One requirement costing 4, one customer paying 8 for it."""
    return build_nrp("tiny", [4], [(8, [0])], [])


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
