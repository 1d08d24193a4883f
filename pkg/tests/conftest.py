import zlib

import numpy as np
import pytest
from hypothesis import settings

from betaconst.stats import ObservationGrid

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

# filled by tests/test_acceptance.py, printed at the end of the run
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def gaussian_grid(rng, n, days=1, beta=1.0, sigma=1.0, sigma_idio=1.0):
    """Exact Gaussian increments with constant vols; ``beta`` may be a per-increment array."""
    dx = rng.standard_normal((days, n)) * sigma / np.sqrt(n)
    e = rng.standard_normal((days, n)) * sigma_idio / np.sqrt(n)
    return ObservationGrid.from_increments(dx, np.asarray(beta) * dx + e)


@pytest.fixture
def rng(request):
    # per-test stream so reordering tests does not change their data
    return np.random.default_rng(zlib.crc32(request.node.name.encode()))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")
