import numpy as np
import pytest
from hypothesis import settings

from weakkam import Grid, SemigroupConfig, backward_step, forward_step, integrate, pendulum
from weakkam.flow import PhasePoint

settings.register_profile("weakkam", deadline=None, derandomize=True)
settings.load_profile("weakkam")


@pytest.fixture(scope="session", autouse=True)
def warm_numba():
    """Compile the kernels once so timed tests measure solver work only."""
    g = Grid(16)
    u = g.constant(0.0)
    backward_step(u, pendulum(), 0.1, 1.0)
    forward_step(u, pendulum(), 0.1, 1.0)
    integrate(pendulum(), 0.1, PhasePoint(0.3, 0.0), 0.01)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, notes = ACCEPTANCE[number]
        tr.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {title}")
        for note in notes:
            tr.write_line(f"    {note}")
