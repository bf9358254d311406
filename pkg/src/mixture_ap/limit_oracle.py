"""
Reference solutions used to judge the kinetic integrators.

* :func:`lambda_of_T` is the temperature-exchange coefficient lambda(T) of
  the limit relaxation system, computed with the same velocity grid and
  sphere rule as the kinetic solver.
* :func:`relax_step_implicit` / :func:`solve_relaxation` integrate

      d/dt n_L = d/dt n_H = 0,   d/dt (n_H u_H) = 0,
      d/dt (3 n_L T_L / 2) = -3 lambda(T_L)/T_L n_L n_H (T_L - T_H),
      d/dt (3 n_H T_H / 2) = -3 lambda(T_L)/T_L n_L n_H (T_H - T_L)

  with backward Euler.
* :func:`reference_rk4_step` advances the un-split kinetic equations
  d/dt f^L = eps^-2 [Q^LL + Q^LH_eps],  d/dt f^H = eps^-1 [Q^HH + Q^HL_eps]
  with classical RK4 and no penalty, for eps of order one.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidParameter, NoConvergence, StabilityViolation
from .phase_space import maxwellian


@dataclass(frozen=True)
class MacroState:
    """Macroscopic state of the limit system."""

    n_L: float
    T_L: float
    n_H: float
    u_H: np.ndarray
    T_H: float
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "u_H", np.broadcast_to(np.asarray(self.u_H, dtype=float), (3,)).copy())
        for name in ("n_L", "T_L", "n_H", "T_H"):
            if not getattr(self, name) > 0:
                raise InvalidParameter(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def thermal_energy(self):
        return 1.5 * (self.n_L * self.T_L + self.n_H * self.T_H)


def lambda_of_T(T, model):
    """lambda(T) by quadrature on the model's grid.

    Boltzmann: (2/3) int int B(v, Omega) (v.Omega)^2 M_{0,T} dOmega dv.
    Landau:    (2/3) int B(v) M_{0,T} dv.
    Both use the cross-species kernel.
    """
    if not T > 0:
        raise InvalidParameter(f"temperature must be positive, got {T}")
    grid, k = model.grid, model.kernel_LH
    m = maxwellian(grid, 1.0, 0.0, T)
    b = k.value(grid.speed2)
    if model.is_fpl:
        dens = b * m
    else:
        proj = np.tensordot(k.sphere.directions, grid.v, axes=(1, 0))
        dens = b * np.tensordot(k.sphere.weights, proj ** 2, axes=(0, 0)) * m
    return float(2.0 / 3.0 * np.sum(dens) * grid.weight)


def _exchange(T_L, T_H, k, m, dt):
    # backward Euler for the two temperatures with frozen coefficient k:
    # T_L' = T_L - a_L (T_L' - T_H'), T_H' = T_H - a_H (T_H' - T_L')
    a_L = 2.0 * dt * k * m.n_H
    a_H = 2.0 * dt * k * m.n_L
    det = 1.0 + a_L + a_H
    tl = ((1.0 + a_H) * T_L + a_L * T_H) / det
    th = (a_H * T_L + (1.0 + a_L) * T_H) / det
    return tl, th


def relax_step_implicit(m, dt, model, lam=None, damping=0.7, tol=1e-12, maxiter=200):
    """One backward-Euler step of the relaxation system.

    The coefficient lambda(T_L^{n+1}) / T_L^{n+1} is evaluated at the new
    temperature; the nonlinear system is solved by damped fixed-point
    iteration.  Each iterate solves the linear system exactly, so the
    thermal energy is conserved at every iterate.

    Parameters
    ----------
    lam : callable, optional
        Replacement for ``lambda_of_T(T, model)``.
    """
    if dt < 0:
        raise InvalidParameter(f"time step must be non-negative, got {dt}")
    lam = (lambda T: lambda_of_T(T, model)) if lam is None else lam
    tl, th = m.T_L, m.T_H
    for it in range(maxiter):
        k = lam(tl) / tl
        ntl, nth = _exchange(m.T_L, m.T_H, k, m, dt)
        tl_next = (1.0 - damping) * tl + damping * ntl
        th_next = (1.0 - damping) * th + damping * nth
        change = max(abs(tl_next - tl), abs(th_next - th)) / max(tl, th)
        tl, th = tl_next, th_next
        if change <= tol:
            return replace(m, T_L=tl, T_H=th, t=m.t + dt)
    raise NoConvergence(f"relaxation step did not converge in {maxiter} iterations",
                        iterations=maxiter, residual=change)


def solve_relaxation(m0, dt, t_end, model, lam=None):
    """Repeated implicit steps; returns arrays (t, T_L, T_H) including t = 0."""
    if not dt > 0:
        raise InvalidParameter(f"time step must be positive, got {dt}")
    steps = int(round(t_end / dt))
    if steps < 0 or not np.isclose(steps * dt, t_end, rtol=0, atol=1e-9 * max(1.0, t_end)):
        raise InvalidParameter(f"t_end={t_end} is not a whole number of steps of {dt}")
    m = m0
    out = [(m.t, m.T_L, m.T_H)]
    for _ in range(steps):
        m = relax_step_implicit(m, dt, model, lam)
        out.append((m.t, m.T_L, m.T_H))
    t, tl, th = (np.array(c) for c in zip(*out))
    return t, tl, th


def kinetic_rhs(fL, fH, eps, model):
    """Right-hand sides of the un-split homogeneous equations."""
    dL = (model.q_LL(fL) + model.q_LH(fL, fH, eps)) / eps ** 2
    dH = (model.q_HH(fH) + model.q_HL(fH, fL, eps)) / eps
    return dL, dH


def reference_rk4_step(fL, fH, eps, dt, model, c=0.1):
    """Classical RK4 step of the un-split equations; needs dt <= c eps^2."""
    if not eps > 0:
        raise InvalidParameter(f"eps must be positive, got {eps}")
    if dt > c * eps ** 2:
        raise StabilityViolation(f"time step {dt} exceeds the explicit bound {c * eps ** 2}")
    k1 = kinetic_rhs(fL, fH, eps, model)
    k2 = kinetic_rhs(fL + 0.5 * dt * k1[0], fH + 0.5 * dt * k1[1], eps, model)
    k3 = kinetic_rhs(fL + 0.5 * dt * k2[0], fH + 0.5 * dt * k2[1], eps, model)
    k4 = kinetic_rhs(fL + dt * k3[0], fH + dt * k3[1], eps, model)
    wL = fL + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    wH = fH + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    return wL, wH
