import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nlsrot.spectral import Field, Grid

settings.register_profile(
    "nlsrot", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("nlsrot")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def profile_grid():
    return Grid(1, 12.0, 1024)


@pytest.fixture(scope="session")
def state_grid(profile_grid):
    return profile_grid.dual()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def gaussian(grid, amp=1.0, center=0.0, k=0.0):
    return grid.field(lambda x: amp * math.pi**-0.25 * np.exp(-0.5 * (x - center) ** 2 + 1j * k * x))


def random_smooth(grid, rng, width=1.0, n_modes=6):
    """Random combination of shifted, modulated Gaussians (smooth and decaying)."""
    vals = np.zeros(grid.shape, dtype=complex)
    for _ in range(n_modes):
        c = rng.uniform(-2, 2, size=grid.d)
        k = rng.uniform(-2, 2, size=grid.d)
        a = rng.standard_normal() + 1j * rng.standard_normal()
        r2 = sum((x - ci) ** 2 for x, ci in zip(grid.coords, c))
        phase = sum(ki * x for x, ki in zip(grid.coords, k))
        vals += a * np.exp(-0.5 * r2 / width**2 + 1j * phase)
    return Field(grid, vals)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
