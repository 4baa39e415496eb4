import numpy as np
import pytest
from hypothesis import settings

from ksdft1d import Grid, InteractionSpec, PotentialField

settings.register_profile("default", deadline=None, max_examples=25)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def soft_coulomb():
    return InteractionSpec.soft_coulomb(1.0, 0.1)


def smooth_potential(grid: Grid, amplitude=10.0) -> PotentialField:
    return PotentialField(amplitude * np.cos(2 * np.pi * grid.nodes))


ACCEPTANCE_LINES = []


@pytest.fixture
def report_criterion():
    """Record a one-line PASS/FAIL verdict for the acceptance summary."""

    def record(number, passed, detail):
        ACCEPTANCE_LINES.append((number, "PASS" if passed else "FAIL", detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, verdict, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"criterion {number:2d}: {verdict}  {detail}")
