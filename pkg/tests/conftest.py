import sys

import numpy as np
import pytest

from hullscope.hull import KERNELS


@pytest.fixture(params=sorted(KERNELS))
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_instance(rng, d_range=(2, 10), n_range=(3, 12), scale=1.0):
    d = int(rng.integers(d_range[0], d_range[1] + 1))
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    V = rng.uniform(-1.0, 1.0, (n, d)) * scale
    q = rng.uniform(-1.0, 1.0, d) * scale
    return V, q


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
