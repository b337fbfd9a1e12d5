from datetime import date

import numpy as np
import pytest

from occuforge.ingest import OccupancySeries

MONDAY = date(2018, 3, 5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_series(days=14, seed=0, start=MONDAY, p=0.4, charger="c1"):
    r = np.random.default_rng(seed)
    return OccupancySeries(charger, start, (r.random(days * 144) < p).astype(np.int8))


@pytest.fixture
def series():
    return random_series()


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
