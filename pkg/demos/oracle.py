"""Macroscopic limit: temperature relaxation between the two species.

Integrates the limit relaxation system with the implicit solver and prints
T_L, T_H and the conserved thermal energy.

    python demos/oracle.py
"""

import numpy as np

from mixture_ap import limit_oracle as lo
from mixture_ap.collision_boltzmann import BoltzKernel
from mixture_ap.operators import CollisionModel
from mixture_ap.phase_space import VelocityGrid


def main():
    grid = VelocityGrid(8.0, 16)
    model = CollisionModel(grid, "boltzmann", BoltzKernel(gamma=0.0, b0=0.1))
    for T in (0.5, 1.0, 2.0):
        print(f"lambda({T}) = {lo.lambda_of_T(T, model):.5f}  closed form {4 * np.pi / 3 * 0.1 * T:.5f}")
    m0 = lo.MacroState(n_L=1.0, T_L=1.0, n_H=1.0, u_H=0.0, T_H=2.0)
    t, tl, th = lo.solve_relaxation(m0, 0.05, 1.0, model)
    for k in range(0, len(t), 4):
        e = 1.5 * (tl[k] + th[k])
        print(f"t={t[k]:.2f}  T_L={tl[k]:.5f}  T_H={th[k]:.5f}  energy={e:.12f}")


if __name__ == "__main__":
    main()
