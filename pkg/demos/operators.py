"""Collision operators on a small velocity grid.

Evaluates the like-particle and cross-species Boltzmann and Landau
operators on Maxwellians, prints the equilibrium residual, the exchanged
moments of the light-heavy pair, and how Q^LH_eps approaches n_H q_0 as the
mass ratio eps shrinks.

    python demos/operators.py
"""

import numpy as np

from mixture_ap.collision_boltzmann import BoltzKernel
from mixture_ap.collision_fpl import FPLKernel
from mixture_ap.operators import CollisionModel
from mixture_ap.phase_space import VelocityGrid, compute_moments, maxwellian


def exchanged(q, grid):
    m = compute_moments(q, grid)
    return m.p0, m.p1[0], m.p2


def main():
    grid = VelocityGrid(6.0, 8)
    models = {
        "boltzmann": CollisionModel(grid, "boltzmann", BoltzKernel(gamma=0.0, b0=0.1, sphere_order=2)),
        "landau": CollisionModel(grid, "fpl", FPLKernel(gamma=0.0, delta=1e-6)),
    }
    fL = maxwellian(grid, 1.0, (0.2, 0.0, 0.0), 1.0)
    fH = maxwellian(grid, 1.0, (-0.1, 0.0, 0.0), 2.0)
    for name, model in models.items():
        print(f"--- {name}")
        res = np.max(np.abs(model.q_LL(fL))) / np.max(fL)
        print(f"  like-particle residual on a Maxwellian: {res:.2e}")
        for eps in (0.5, 0.1, 0.02):
            qlh, qhl = model.q_LH(fL, fH, eps), model.q_HL(fH, fL, eps)
            mL, mH = exchanged(qlh, grid), exchanged(qhl, grid)
            gap = np.max(np.abs(qlh - model.q0_LH(fL, fH))) / np.max(np.abs(qlh))
            print(f"  eps={eps:<5} mass {mL[0]:+.1e}/{mH[0]:+.1e}  "
                  f"momentum sum {mL[1] + mH[1]:+.1e}  energy sum {mL[2] + eps * mH[2]:+.1e}  "
                  f"|Q^LH - q0| / |Q^LH| {gap:.3f}")


if __name__ == "__main__":
    main()
