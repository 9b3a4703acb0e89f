import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nashlab.corpus import random_band_limited
from nashlab.radial import UnitHeatFlow, make_annular_profile
from nashlab.spectral import GridSpec

settings.register_profile(
    "nashlab", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("nashlab")


@pytest.fixture(scope="session")
def grid64():
    return GridSpec(64)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def smooth_field(grid64, rng):
    return random_band_limited(grid64, rng, kmax=10)


@pytest.fixture(scope="session")
def annulus():
    return make_annular_profile()


@pytest.fixture(scope="session")
def flow(annulus):
    # heat-flow evaluations are memoized, so sharing the instance saves minutes
    return UnitHeatFlow(annulus)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report_criterion():
    """Record one PASS/FAIL line; the lines are repeated in the terminal summary."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        _ACCEPTANCE_LINES.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
