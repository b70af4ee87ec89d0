import os
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ephybrid.experiments import (
    builtin_example1,
    builtin_example2,
    run_grid,
    table1_config,
    table2_config,
)


def _serial_grid(config):
    """Run a grid single-threaded so per-run timings are honest."""
    saved = os.environ.get("EPHYBRID_MAX_THREADS")
    os.environ["EPHYBRID_MAX_THREADS"] = "1"
    try:
        tic = time.perf_counter()
        runs = run_grid(config)
        wall = time.perf_counter() - tic
    finally:
        if saved is None:
            os.environ.pop("EPHYBRID_MAX_THREADS", None)
        else:
            os.environ["EPHYBRID_MAX_THREADS"] = saved
    return runs, wall


@pytest.fixture(scope="session")
def example1():
    return builtin_example1()


@pytest.fixture(scope="session")
def example2():
    return builtin_example2()


@pytest.fixture(scope="session")
def table1_grid():
    """The three example-1 benchmark runs plus wall time (expensive; shared)."""
    return _serial_grid(table1_config())


@pytest.fixture(scope="session")
def table1_runs(table1_grid):
    return table1_grid[0]


@pytest.fixture(scope="session")
def table2_grid():
    """The 4 x 3 example-2 benchmark grid plus wall time."""
    return _serial_grid(table2_config())


@pytest.fixture(scope="session")
def table2_runs(table2_grid):
    return table2_grid[0]
