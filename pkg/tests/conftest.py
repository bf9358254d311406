import numpy as np
import pytest

from mixture_ap.collision_boltzmann import BoltzKernel
from mixture_ap.collision_fpl import FPLKernel
from mixture_ap.operators import CollisionModel
from mixture_ap.phase_space import VelocityGrid, maxwellian


@pytest.fixture(scope="session")
def grid8():
    return VelocityGrid(6.0, 8)


@pytest.fixture(scope="session")
def boltz8(grid8):
    return CollisionModel(grid8, "boltzmann", BoltzKernel(gamma=0.0, b0=0.1, sphere_order=2))


@pytest.fixture(scope="session")
def fpl8(grid8):
    return CollisionModel(grid8, "fpl", FPLKernel(gamma=0.0, delta=1e-6))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def perturbed_maxwellian(grid, rng, n=1.0, u=0.0, T=1.0, amp=0.1):
    """Positive non-equilibrium field: a Maxwellian times a bounded random factor."""
    return maxwellian(grid, n, u, T) * (1.0 + amp * rng.uniform(-1.0, 1.0, grid.shape))


_ACCEPTANCE = {}


@pytest.fixture
def verdict():
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def record(number, title, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d}: {title}"
        if detail:
            line += f" | {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])
