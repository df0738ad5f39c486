import time

import pytest

from contactreach.scenario import run_grid


@pytest.fixture(scope="session")
def trinal_grid():
    """Full 15-cell (mass x speed) verification grid with the trinal
    intersection method and default settings; shared across the
    acceptance tests because it is by far the most expensive artifact."""
    t0 = time.perf_counter()
    cells = run_grid()
    wall = time.perf_counter() - t0
    return cells, wall
