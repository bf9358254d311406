"""
Landau (Fokker-Planck-Landau) collision operators in divergence form.

    Q^LL(f, f) = div int B(v - v_*) S(v - v_*) (grad f f_* - grad_* f_* f) dv_*
    Q^LH_eps   = div_L int B(w) S(w) (grad f^L f^H - eps grad f^H f^L) dv^H
    Q^HL_eps   = -div_H int B(w) S(w) (grad f^L f^H - eps grad f^H f^L) dv^L

with w = v^L - eps v^H, S(w) = I - w w^T / |w|^2 and B(w) = |w|^(gamma+2) / 2.
The heavy operator carries the minus sign that makes the exchanged
momentum cancel, int Q^LH v^L + int Q^HL v^H = 0, and the energy balance
int Q^LH |v^L|^2 + eps int Q^HL |v^H|^2 = 0 follows from S(w) w = 0.

Discretisation: node gradients from :func:`phase_space.gradient`, exact
pair sums for the fluxes, and :func:`phase_space.divergence` (the negative
adjoint of the gradient) for the outer divergence.  The divergence
telescopes, so every operator conserves mass to round-off and no flux
leaves the velocity box.  |w|^2 is regularised to |w|^2 + delta^2 in both
B and S.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _fpl_kernels as _k
from .errors import InvalidParameter
from .phase_space import divergence, drift_operator, gradient


@dataclass(frozen=True)
class FPLKernel:
    """Landau kernel B(w) = |w|^(gamma+2) / 2.

    Parameters
    ----------
    gamma : float
        Exponent; -3 is the Coulomb case, 0 gives Maxwell-type molecules.
    delta : float
        Regularisation speed; must be positive when gamma + 2 < 0.
    """

    gamma: float = -3.0
    delta: float = 1e-6
    model: str = field(default="fpl", init=False)

    def __post_init__(self):
        if self.gamma + 2 < 0 and not self.delta > 0:
            raise InvalidParameter("delta must be positive when gamma + 2 < 0")
        if self.delta < 0:
            raise InvalidParameter(f"delta must be non-negative, got {self.delta}")

    @classmethod
    def for_grid(cls, grid, gamma=-3.0):
        """Kernel with the default regularisation delta = 1e-6 V_max."""
        return cls(gamma=gamma, delta=1e-6 * grid.v_max)

    def value(self, w2):
        return 0.5 * (np.asarray(w2, dtype=float) + self.delta ** 2) ** (0.5 * (self.gamma + 2.0))


def _check_eps(eps):
    if not (np.isfinite(eps) and eps > 0):
        raise InvalidParameter(f"eps must be positive, got {eps}")


def _flux(gl, fl, gh, fh, eps, out_light, k, grid):
    return _k.pair_flux(
        np.ascontiguousarray(gl), np.ascontiguousarray(fl, dtype=float),
        np.ascontiguousarray(gh), np.ascontiguousarray(fh, dtype=float),
        float(eps), out_light, grid.v_max, grid.dv, float(k.gamma), float(k.delta))


def q_intra_fpl(f, k, grid, g=None):
    """Like-particle Landau operator; symmetric bilinear Q(f, g) if g is given."""
    grid.check(f)
    gf = gradient(f, grid)
    if g is None:
        return divergence(_flux(gf, f, gf, f, 1.0, True, k, grid), grid)
    grid.check(g)
    gg = gradient(g, grid)
    flux = 0.5 * (_flux(gf, f, gg, g, 1.0, True, k, grid) + _flux(gg, g, gf, f, 1.0, True, k, grid))
    return divergence(flux, grid)


def q_inter_LH_eps_fpl(fL, fH, eps, k, grid):
    grid.check(fL, fH)
    _check_eps(eps)
    flux = _flux(gradient(fL, grid), fL, gradient(fH, grid), fH, eps, True, k, grid)
    return divergence(flux, grid)


def q_inter_HL_eps_fpl(fH, fL, eps, k, grid):
    grid.check(fL, fH)
    _check_eps(eps)
    flux = _flux(gradient(fL, grid), fL, gradient(fH, grid), fH, eps, False, k, grid)
    return divergence(flux, grid)


def limit_tensor(k, grid):
    """B(v) S(v) at every node as a (3, 3, N, N, N) array."""
    v = grid.v
    r2 = grid.speed2 + k.delta ** 2
    b = k.value(grid.speed2)
    eye = np.eye(3)[:, :, None, None, None]
    return b * (eye - v[:, None] * v[None, :] / r2)


def q0_fpl(f, k, grid, tensor=None):
    """q_0(f) = div(B(v) S(v) grad f); linear, local, symmetric negative semidefinite."""
    grid.check(f)
    a = limit_tensor(k, grid) if tensor is None else tensor
    flux = np.einsum("ab...,b...->a...", a, gradient(f, grid))
    return divergence(flux, grid)


def q0_LH_fpl(fL, nH, k, grid):
    """Q_0^LH = n^H q_0(f^L)."""
    if nH < 0:
        raise InvalidParameter(f"heavy density must be non-negative, got {nH}")
    if nH == 0:
        return grid.zeros()
    return nH * q0_fpl(fL, k, grid)


def drift_vector_fpl(fL, k, grid):
    """d = int B(v) / |v|^2 v f^L dv with |v|^2 regularised by delta^2."""
    grid.check(fL)
    r2 = grid.speed2 + k.delta ** 2
    dens = k.value(grid.speed2) / r2 * fL
    return np.array([np.sum(dens * grid.v[a]) for a in range(3)]) * grid.weight


def q0_HL_fpl(fH, fL, k, grid):
    """Q_0^HL = -2 grad f^H . d(f^L)."""
    return drift_operator(fH, drift_vector_fpl(fL, k, grid), grid)


def diffusion_matrix(g, k, grid):
    """D(g)(v) = int B(v - v_*) S(v - v_*) g_* dv_* as (3, 3, N, N, N)."""
    grid.check(g)
    d6 = _k.diffusion_matrix(np.ascontiguousarray(g, dtype=float), grid.v_max, grid.dv,
                             float(k.gamma), float(k.delta))
    xx, yy, zz, xy, xz, yz = d6
    return np.array([[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]])
