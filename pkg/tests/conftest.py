from fractions import Fraction

import numpy as np
import pytest

from interclosure import Channel, channel_from_function, example_universe, make_universe
from oracles import random_channel, random_kernel

F = Fraction

FIXTURE_ROWS = [
    [F(1, 3), 0, 0, F(1, 3), 0, 0],
    [F(1, 3), 0, 0, F(1, 6), 0, 0],
    [F(1, 3), 0, 0, F(3, 6), 0, 0],
    [0, F(1, 3), F(1, 2), 0, F(1, 4), F(1, 2)],
    [0, F(1, 3), F(1, 4), 0, F(1, 2), 0],
    [0, F(1, 3), F(1, 4), 0, F(1, 4), F(1, 2)],
]
FIXTURE_STATIONARY = np.array([9, 6, 12, 18, 10, 15]) / 70
FM = (1, 1, 1, 2, 2, 2)
FS = (1, 2, 2, 1, 2, 2)


@pytest.fixture(scope="session")
def fixture_universe():
    return example_universe()


@pytest.fixture(scope="session")
def fixture_joint(fixture_universe):
    return fixture_universe.joint


def random_universe(seed, n=None, ks=None, km=None, deterministic=False):
    """Unconstrained universe: Dirichlet kernel and channels, no closure imposed."""
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(2, 7))
    ks = ks or int(rng.integers(1, 4))
    km = km or int(rng.integers(1, 4))
    P = random_kernel(rng, n)
    if deterministic:
        chans = {
            "S": channel_from_function(rng.integers(1, ks + 1, size=n), n, ks),
            "M": channel_from_function(rng.integers(1, km + 1, size=n), n, km),
        }
    else:
        chans = {"S": Channel(random_channel(rng, ks, n)), "M": Channel(random_channel(rng, km, n))}
    return make_universe(P, chans)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE = []


@pytest.fixture
def criterion(request):
    entry = {"name": request.node.name, "passed": False, "detail": "did not complete"}
    yield entry
    ACCEPTANCE.append(entry)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for e in ACCEPTANCE:
        verdict = "PASS" if e["passed"] else "FAIL"
        terminalreporter.write_line(f"{verdict}  {e['name']}: {e['detail']}")
