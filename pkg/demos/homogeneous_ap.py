"""Space-homogeneous AP scheme at several mass ratios with one fixed time step.

Runs the split scheme for eps = 1e-1, 1e-2 and 1e-4 with the same dt and
prints the reconstructed temperatures next to the limit oracle, together
with the per-step cost.

    python demos/homogeneous_ap.py
"""

import time

from mixture_ap import ap_homogeneous as aph
from mixture_ap import limit_oracle as lo
from mixture_ap.collision_fpl import FPLKernel
from mixture_ap.operators import CollisionModel
from mixture_ap.phase_space import VelocityGrid, compute_moments


def temps(state, grid):
    fL, fH = aph.reconstruct(state)
    return compute_moments(fL, grid).macro()[2], compute_moments(fH, grid).macro()[2]


def main():
    grid = VelocityGrid(6.0, 8)
    model = CollisionModel(grid, "fpl", FPLKernel(gamma=0.0, delta=1e-6))
    dt, steps = 0.02, 25
    t, tl, th = lo.solve_relaxation(lo.MacroState(1.0, 1.0, 1.0, 0.0, 2.0), dt, dt * steps, model)
    print(f"oracle at t={t[-1]:.2f}: T_L={tl[-1]:.4f} T_H={th[-1]:.4f}")
    for eps in (1e-1, 1e-2, 1e-4):
        s = aph.SplitState.from_maxwellians(grid, eps, (1.0, 0.0, 1.0), (1.0, 0.0, 2.0))
        cfg = aph.SchemeConfig(dt=dt, model=model)
        t0 = time.perf_counter()
        for _ in range(steps):
            s = aph.ap_step(s, cfg)
        cost = (time.perf_counter() - t0) / steps
        a, b = temps(s, grid)
        print(f"eps={eps:<7g} T_L={a:.4f} T_H={b:.4f}  {cost * 1e3:.0f} ms/step  "
              f"negative nodes {aph.negative_nodes(aph.reconstruct(s)[0])}")


if __name__ == "__main__":
    main()
