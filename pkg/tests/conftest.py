import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sllb.grid import Field, Grid
from sllb.marcus import MaterialField

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

GRID8 = Grid(1, 8)

finite = st.floats(-5.0, 5.0, allow_nan=False, allow_infinity=False)


def field_values(grid=GRID8):
    return arrays(np.float64, grid.shape + (3,), elements=finite)


jump_sizes = st.floats(-1.0, 1.0, allow_nan=False).filter(lambda l: l != 0.0)


@pytest.fixture
def grid():
    return Grid(1, 16)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def const_h(grid, vec=(0.0, 0.0, 1.0)):
    return MaterialField(Field.constant(grid, vec))


def ramp_h(grid):
    x = grid.centers()[..., 0]
    h = np.zeros(grid.shape + (3,))
    h[..., 0] = np.cos(np.pi * x)
    h[..., 2] = 1.0 + x
    return MaterialField(Field(grid, h))


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
