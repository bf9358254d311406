"""Penalty building blocks: BGK relaxation and the Fokker-Planck penalty solve.

Shows the implicit BGK update, then solves (I - c P_FP) f = rhs with the
symmetrised conjugate gradient and checks the result against a dense solve.

    python demos/penalty.py
"""

import numpy as np

from mixture_ap import penalty as pn
from mixture_ap.phase_space import VelocityGrid, maxwellian


def main():
    grid = VelocityGrid(6.0, 8)
    m = maxwellian(grid, 1.0, 0.0, 1.0)
    f = m * (1.0 + 0.1 * np.cos(grid.v[0]))

    for c in (0.1, 1.0, 100.0):
        g = pn.bgk_implicit_update(f, m, c)
        print(f"BGK c={c:<6} distance to M: {np.max(np.abs(g - m)):.2e}")

    c = 5.0
    sol = pn.fp_implicit_solve(f, m, c, grid)
    op = pn.SymmetrizedFP(m, grid)
    n = grid.size
    dense = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        dense[:, j] = e - c * op.apply(e.reshape(grid.shape)).ravel()
    h = np.linalg.solve(dense, (f / op.sqrt_m).ravel()).reshape(grid.shape)
    err = np.max(np.abs(sol / op.sqrt_m - h)) / np.max(np.abs(h))
    print(f"FP penalty solve c={c}: CG vs dense relative difference {err:.1e}")
    print(f"mass before {np.sum(f) * grid.weight:.12f} after {np.sum(sol) * grid.weight:.12f}")


if __name__ == "__main__":
    main()
