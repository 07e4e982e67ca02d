import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hyperdiss import catalog
from hyperdiss.spectrum import default_s_grid

settings.register_profile(
    "repro", derandomize=True, deadline=None, print_blob=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repro")


@pytest.fixture(scope="session")
def tim2():
    return catalog.timoshenko(2.0, 1.0)


@pytest.fixture(scope="session")
def tim1():
    return catalog.timoshenko(1.0, 1.0)


@pytest.fixture(scope="session")
def toy():
    return catalog.symmetric_toy()


@pytest.fixture(scope="session")
def em():
    return catalog.euler_maxwell(1.0, 1.0, (0.0, 0.0, 1.0))


@pytest.fixture(scope="session")
def s_grid():
    return default_s_grid()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
