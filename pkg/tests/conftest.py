import math

import numpy as np
import pytest

from linefollower import _pykernels
from linefollower.kinematics import RobotGeometry, StepConfig

try:
    from linefollower import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = [_pykernels] + ([_ckernels] if _ckernels is not None else [])


@pytest.fixture
def geom():
    return RobotGeometry()


@pytest.fixture
def cfg():
    return StepConfig(0.01)


@pytest.fixture(params=BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def backend(request):
    return request.param


def random_cases(n, seed=0, w_max=20 * math.pi):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-2, 2, n)
    y = rng.uniform(-2, 2, n)
    d = rng.uniform(-math.pi, math.pi, n)
    wl = rng.uniform(-w_max, w_max, n)
    wr = rng.uniform(-w_max, w_max, n)
    return list(zip(x, y, d, wl, wr))


# one verdict line per acceptance criterion, printed after the run
VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
