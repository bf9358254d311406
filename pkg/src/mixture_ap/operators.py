"""
A single object bundling the collision operators of one model on one grid.

The integrators only talk to :class:`CollisionModel`, so Boltzmann and
Landau runs share the same stepping code.
"""

from dataclasses import dataclass, field

import numpy as np

from . import collision_boltzmann as cb
from . import collision_fpl as cf
from .errors import InvalidParameter
from .phase_space import VelocityGrid, maxwellian

MODELS = ("boltzmann", "fpl")


@dataclass(frozen=True)
class CollisionModel:
    """Operators for the light/heavy mixture on a shared velocity grid.

    Parameters
    ----------
    grid : VelocityGrid
    kind : {"boltzmann", "fpl"}
    kernel_LL, kernel_HH, kernel_LH : kernel objects
        Like-particle kernels and the cross-species kernel (used for both
        Q^LH and Q^HL).  Missing kernels default to ``kernel_LL``.
    """

    grid: VelocityGrid
    kind: str = "boltzmann"
    kernel_LL: object = None
    kernel_HH: object = None
    kernel_LH: object = None
    conservative: bool = True
    _tensor: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in MODELS:
            raise InvalidParameter(f"unknown collision model {self.kind!r}")
        kll = self.kernel_LL
        if kll is None:
            kll = cb.BoltzKernel() if self.kind == "boltzmann" else cf.FPLKernel.for_grid(self.grid)
            object.__setattr__(self, "kernel_LL", kll)
        for name in ("kernel_HH", "kernel_LH"):
            if getattr(self, name) is None:
                object.__setattr__(self, name, kll)
        for k in (self.kernel_LL, self.kernel_HH, self.kernel_LH):
            if k.model != self.kind:
                raise InvalidParameter(f"kernel of type {k.model!r} used in a {self.kind!r} model")

    @property
    def is_fpl(self):
        return self.kind == "fpl"

    # like-particle operators -------------------------------------------------
    def _intra(self, f, g, k):
        if self.is_fpl:
            return cf.q_intra_fpl(f, k, self.grid, g)
        return cb.q_intra(f, f if g is None else g, k, self.grid, conservative=self.conservative)

    def q_LL(self, f, g=None):
        return self._intra(f, g, self.kernel_LL)

    def q_HH(self, f, g=None):
        return self._intra(f, g, self.kernel_HH)

    # cross-species operators -------------------------------------------------
    def q_LH(self, fL, fH, eps):
        if self.is_fpl:
            return cf.q_inter_LH_eps_fpl(fL, fH, eps, self.kernel_LH, self.grid)
        return cb.q_inter_LH_eps(fL, fH, eps, self.kernel_LH, self.grid, self.conservative)

    def q_HL(self, fH, fL, eps):
        if self.is_fpl:
            return cf.q_inter_HL_eps_fpl(fH, fL, eps, self.kernel_LH, self.grid)
        return cb.q_inter_HL_eps(fH, fL, eps, self.kernel_LH, self.grid, self.conservative)

    def q0(self, f):
        """Limit scattering operator q_0 acting on a light field."""
        if self.is_fpl:
            return cf.q0_fpl(f, self.kernel_LH, self.grid, tensor=self.limit_tensor())
        return cb.q0(f, self.kernel_LH, self.grid, self.conservative)

    def q0_LH(self, fL, fH):
        """Q_0^LH(f^L, f^H) = n^H q_0(f^L) with n^H the discrete mass of ``fH``."""
        return self.density(fH) * self.q0(fL)

    def density(self, f):
        return float(np.sum(f)) * self.grid.weight

    def friction_rate(self, T):
        """kappa with int v q_0(M_{1,u,T}) dv ~ -kappa P_1 for a slowly drifting Maxwellian."""
        u = 0.1 * np.sqrt(T)
        m = maxwellian(self.grid, 1.0, (u, 0.0, 0.0), T)
        j = float(np.sum(self.q0(m) * self.grid.v[0])) * self.grid.weight
        p1 = float(np.sum(m * self.grid.v[0])) * self.grid.weight
        return max(-j / p1, 0.0)

    def q0_HL(self, fH, fL):
        if self.is_fpl:
            return cf.q0_HL_fpl(fH, fL, self.kernel_LH, self.grid)
        return cb.q0_HL(fH, fL, self.kernel_LH, self.grid)

    def limit_tensor(self):
        """Cached B(v) S(v) of the Landau limit operator."""
        if "t" not in self._tensor:
            self._tensor["t"] = cf.limit_tensor(self.kernel_LH, self.grid)
        return self._tensor["t"]

    def equilibrium(self, n, u, T):
        return maxwellian(self.grid, n, u, T)
