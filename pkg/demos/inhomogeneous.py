"""Space-dependent scheme on a periodic slab.

A light density wave over a heavy temperature wave, advanced with the
collision and upwind transport steps; prints cell densities and the
conserved total masses.

    python demos/inhomogeneous.py
"""

import numpy as np

from mixture_ap import ap_homogeneous as aph
from mixture_ap import ap_inhomogeneous as api
from mixture_ap.collision_fpl import FPLKernel
from mixture_ap.operators import CollisionModel
from mixture_ap.phase_space import VelocityGrid, compute_moments


def main():
    grid = VelocityGrid(6.0, 8)
    model = CollisionModel(grid, "fpl", FPLKernel(gamma=0.0, delta=1e-6))
    mesh = api.SpatialMesh(nx=8, dx=0.125)
    cfg = api.InhomConfig(aph.SchemeConfig(dt=0.01, model=model), mesh)
    light = [(1.0 + 0.2 * np.sin(2 * np.pi * x), 0.0, 1.0) for x in mesh.centers]
    heavy = [(1.0, 0.0, 2.0 - 0.3 * np.cos(2 * np.pi * x)) for x in mesh.centers]
    f = api.FieldArray.from_profiles(grid, 0.1, light, heavy)
    m0 = api.total_mass(f, mesh, grid)
    for step in range(1, 11):
        f = api.full_step(f, cfg)
        if step % 5 == 0:
            n = [compute_moments(f.fL0[i] + f.eps * f.fL1[i], grid).p0 for i in range(mesh.nx)]
            m = api.total_mass(f, mesh, grid)
            print(f"step {step}: light density " + " ".join(f"{v:.3f}" for v in n))
            print(f"         total mass change {m[0] - m0[0]:+.1e} (light) {m[1] - m0[1]:+.1e} (heavy)")


if __name__ == "__main__":
    main()
