import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
    from regulattice.potential import bound_check_stats

    stats = bound_check_stats()
    terminalreporter.write_line(
        f"potential upper bound: {stats['checks']} checks, {stats['violations']} violations over the session"
    )


def pytest_sessionfinish(session, exitstatus):
    from regulattice.potential import bound_check_stats

    if bound_check_stats()["violations"] and exitstatus == 0:
        session.exitstatus = 1
