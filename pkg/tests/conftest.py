import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from baton import kernels
from baton.sim import default_links

settings.register_profile("baton", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("baton")


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    """Run the test once per kernel backend, restoring the default afterwards."""
    before = kernels.BACKEND
    kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(before)


@pytest.fixture
def links4():
    return default_links(4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
