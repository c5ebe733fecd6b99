from pathlib import Path

import numpy as np
import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def tiny_dir():
    return FIXTURES / "tiny"


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def well_separated(rng, n, d, min_dist=0.2, box=1.5):
    """Random configuration with no pair closer than ``min_dist``."""
    while True:
        P = rng.uniform(-box, box, (n, d))
        diff = P[:, None] - P[None]
        dist = np.sqrt((diff**2).sum(-1)) + np.eye(n) * 10
        if dist.min() > min_dist:
            return P


_CRITERIA = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line, e.g. ``criterion(3, "energy descent", ok, "97/100")``."""
    log = request.config.stash.setdefault(_CRITERIA, [])

    def record(number, name, ok, detail):
        line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {name} ({detail})"
        log.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_CRITERIA, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
