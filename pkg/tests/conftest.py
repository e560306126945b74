import sys

import numpy as np
import pytest
from hypothesis import settings

from jlps.core import JacobiParams

settings.register_profile("jlps", max_examples=40, deadline=None)
settings.load_profile("jlps")

PARAMS = [JacobiParams(-0.5, -0.5), JacobiParams(0.0, 0.0), JacobiParams(0.7, 2.3)]


@pytest.fixture(params=PARAMS, ids=lambda p: f"a{p.alpha:g}_b{p.beta:g}")
def params(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    lines = getattr(mod, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
