"""
Quick invariant checks behind the ``selftest`` verb.

Each check is small enough to finish in seconds at N = 8 and prints one
line.  The full suite lives in the test directory.
"""

import numpy as np

from . import ap_homogeneous as aph
from . import ap_inhomogeneous as api
from . import limit_oracle as lo
from . import penalty as pn
from .collision_boltzmann import BoltzKernel
from .operators import CollisionModel
from .phase_space import VelocityGrid, compute_moments, maxwellian


def _psi():
    return api.psi_factors(2.0) == (0.25, 0.5) and api.psi_factors(0.1) == (1.0, 1.0)


def _polarisation(model):
    rng = np.random.default_rng(1)
    g = model.grid
    f = maxwellian(g, 1.0, 0.0, 1.0) * (1 + 0.1 * rng.uniform(-1, 1, g.shape))
    h = maxwellian(g, 1.0, 0.2, 1.2)
    diag = np.max(np.abs(model.q_LL(f, f) - model.q_LL(f))) / np.max(np.abs(model.q_LL(f)))
    sym = np.max(np.abs(model.q_LL(f, h) - model.q_LL(h, f))) / np.max(np.abs(model.q_LL(f, h)))
    return max(diag, sym) <= 1e-12


def _fp_penalty(grid):
    m = maxwellian(grid, 1.0, 0.0, 1.0)
    op = pn.SymmetrizedFP(m, grid)
    rng = np.random.default_rng(2)
    a, b = rng.standard_normal(grid.shape), rng.standard_normal(grid.shape)
    lhs, rhs = np.sum(a * op.apply(b)), np.sum(b * op.apply(a))
    return abs(lhs - rhs) <= 1e-12 * np.sum(np.abs(a * op.apply(b))) and np.sum(a * op.apply(a)) <= 0


def _oracle(model):
    m = lo.MacroState(1.0, 1.0, 1.0, 0.0, 2.0)
    m1 = lo.relax_step_implicit(m, 0.01, model)
    return abs(m1.thermal_energy - m.thermal_energy) <= 1e-12 * m.thermal_energy and m1.T_L > m.T_L


def _mass(model):
    s = aph.SplitState.from_maxwellians(model.grid, 1e-2, (1.0, 0.0, 1.0), (1.0, 0.0, 2.0))
    cfg = aph.SchemeConfig(dt=0.01, model=model)
    s1 = aph.ap_step(s, cfg)
    g = model.grid
    return (abs(s1.momL0.p0 - s.momL0.p0) <= 1e-13 and abs(s1.momH0.p0 - s.momH0.p0) <= 1e-13
            and abs(compute_moments(s1.fH0, g).p0 - 1.0) <= 1e-3)


def run_selftest(out=print):
    """Run every check; returns True when all pass."""
    grid = VelocityGrid(6.0, 8)
    model = CollisionModel(grid, "boltzmann", BoltzKernel(gamma=0.0, b0=0.1))
    checks = [
        ("psi factors", _psi),
        ("polarisation identity", lambda: _polarisation(model)),
        ("Fokker-Planck penalty symmetric, non-positive", lambda: _fp_penalty(grid)),
        ("relaxation oracle energy identity", lambda: _oracle(model)),
        ("AP step keeps tracked densities", lambda: _mass(model)),
    ]
    ok = True
    for name, fn in checks:
        passed = bool(fn())
        ok &= passed
        out(f"{'PASS' if passed else 'FAIL'}  {name}")
    return ok
