"""
Space-dependent mixture in a periodic 1D slab with 3D velocities.

    d/dt f^L + eps^-1 (v.grad_x f^L + F^L.grad_v f^L) = eps^-2 [Q^LL + Q^LH_eps],
    d/dt f^H +        (v.grad_x f^H + F^H.grad_v f^H) = eps^-1 [Q^HH + Q^HL_eps].

With f = f_0 + eps f_1 the stiff transport of f_1 is rewritten as a
diffusive relaxation system with weights psi_1 = min(1, 1/eps^2) and
psi_2 = min(1, 1/eps).  One step is a first-order splitting:

1. collision: the homogeneous penalised step in every cell, with the
   remainder -(1 - eps^2 psi_1) T^L f_{L,0}^* (light) and
   -(1 - eps psi_2) T^H f_{H,0}^* (heavy) added inside the f_1 brackets,
   T = v.grad_x + F.grad_v by central differences;
2. transport: explicit and first-order upwind,

       f_{L,0} -= dt T f_{L,1},      f_{L,1} -= dt psi_1 T f_{L,0},
       f_{H,0} -= eps dt T f_{H,1},  f_{H,1} -= dt psi_2 T f_{H,0},

   all right-hand sides taken after the collision step.

The tracked f_0 moments get the collision increments of the homogeneous
scheme plus the transport increments -dt int phi T f_1^n, evaluated with the
same upwind operator as step 2 so cell masses telescope exactly.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import ap_homogeneous as aph
from .errors import CFLViolation, InvalidParameter
from .phase_space import MomentVector, compute_moments, gradient

_AXIS_X = 0


def psi_factors(eps):
    """(psi_1, psi_2) = (min(1, 1/eps^2), min(1, 1/eps))."""
    if not (np.isfinite(eps) and eps > 0):
        raise InvalidParameter(f"eps must be positive, got {eps}")
    return min(1.0, 1.0 / eps ** 2), min(1.0, 1.0 / eps)


@dataclass(frozen=True)
class SpatialMesh:
    """Uniform 1D mesh of ``nx`` cells of width ``dx`` along the first velocity axis."""

    nx: int
    dx: float
    periodic: bool = True

    def __post_init__(self):
        if int(self.nx) != self.nx or self.nx < 2:
            raise InvalidParameter(f"the mesh needs at least 2 cells, got {self.nx}")
        if not (np.isfinite(self.dx) and self.dx > 0):
            raise InvalidParameter(f"cell width must be positive, got {self.dx}")

    @property
    def centers(self):
        return (np.arange(self.nx) + 0.5) * self.dx

    @property
    def length(self):
        return self.nx * self.dx


@dataclass(frozen=True)
class FieldArray:
    """Split fields of shape (N_x, N, N, N) per species, f_0 moments per cell and forces."""

    fL0: np.ndarray
    fL1: np.ndarray
    fH0: np.ndarray
    fH1: np.ndarray
    momL0: np.ndarray
    momH0: np.ndarray
    eps: float
    force_L: np.ndarray = field(default_factory=lambda: np.zeros(3))
    force_H: np.ndarray = field(default_factory=lambda: np.zeros(3))
    t: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.eps) and self.eps > 0):
            raise InvalidParameter(f"eps must be positive, got {self.eps}")
        shape = np.shape(self.fL0)
        if len(shape) != 4:
            raise InvalidParameter("fields must have shape (N_x, N, N, N)")
        for f in (self.fL1, self.fH0, self.fH1):
            if np.shape(f) != shape:
                raise InvalidParameter("all four fields must share one mesh and grid")
        for m in (self.momL0, self.momH0):
            if np.shape(m) != (shape[0], 5):
                raise InvalidParameter("moments must have shape (N_x, 5)")
        for name in ("force_L", "force_H"):
            object.__setattr__(self, name, np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (3,)).copy())

    @property
    def nx(self):
        return self.fL0.shape[0]

    def cell(self, i):
        """The homogeneous split state of cell ``i``."""
        return aph.SplitState(self.fL0[i], self.fL1[i], self.fH0[i], self.fH1[i],
                              MomentVector.from_array(self.momL0[i]),
                              MomentVector.from_array(self.momH0[i]), self.eps, self.t)

    @classmethod
    def from_cells(cls, states, force_L=0.0, force_H=0.0):
        """Stack homogeneous split states, one per cell."""
        s0 = states[0]
        return cls(np.stack([s.fL0 for s in states]), np.stack([s.fL1 for s in states]),
                   np.stack([s.fH0 for s in states]), np.stack([s.fH1 for s in states]),
                   np.stack([s.momL0.as_array() for s in states]),
                   np.stack([s.momH0.as_array() for s in states]),
                   s0.eps, force_L, force_H, s0.t)

    @classmethod
    def from_profiles(cls, grid, eps, light, heavy, force_L=0.0, force_H=0.0):
        """Local Maxwellians with f_1 = 0; ``light``/``heavy`` list one (n, u, T) per cell."""
        states = [aph.SplitState.from_maxwellians(grid, eps, l, h) for l, h in zip(light, heavy)]
        return cls.from_cells(states, force_L, force_H)


@dataclass(frozen=True)
class InhomConfig:
    """Per-cell scheme settings plus the mesh and the CFL number."""

    scheme: aph.SchemeConfig
    mesh: SpatialMesh
    cfl: float = 0.9

    def __post_init__(self):
        if not self.cfl > 0:
            raise InvalidParameter(f"CFL number must be positive, got {self.cfl}")

    @property
    def dt(self):
        return self.scheme.dt


# --------------------------------------------------------- discrete operators

def central_x(f, mesh):
    """Central x-derivative with periodic wrap (zero ghost cells otherwise)."""
    if mesh.periodic:
        return (np.roll(f, -1, axis=0) - np.roll(f, 1, axis=0)) / (2.0 * mesh.dx)
    p = np.pad(f, [(1, 1)] + [(0, 0)] * (f.ndim - 1))
    return (p[2:] - p[:-2]) / (2.0 * mesh.dx)


def _shift(f, step, periodic):
    # f at cell i + step, with zero ghost cells when not periodic
    if periodic:
        return np.roll(f, -step, axis=0)
    out = np.zeros_like(f)
    if step > 0:
        out[:-step] = f[step:]
    else:
        out[-step:] = f[:step]
    return out


def upwind_x(f, vx, mesh):
    """v_x d/dx f, first-order upwind by the sign of v_x at each velocity node."""
    back = (f - _shift(f, -1, mesh.periodic)) / mesh.dx
    fwd = (_shift(f, 1, mesh.periodic) - f) / mesh.dx
    return np.where(vx > 0, vx * back, vx * fwd)


def upwind_v(f, force, grid):
    """F . grad_v f, first-order upwind by the sign of each force component.

    Nodes outside the velocity box are zero (no inflow).  The last three
    axes of ``f`` are the velocity axes.
    """
    out = np.zeros_like(f)
    lead = f.ndim - 3
    for a in range(3):
        fa = force[a]
        if fa == 0:
            continue
        ax = lead + a
        g = np.moveaxis(f, ax, -1)
        if fa > 0:
            nb = np.concatenate([np.zeros_like(g[..., :1]), g[..., :-1]], axis=-1)
            d = (g - nb) / grid.dv
        else:
            nb = np.concatenate([g[..., 1:], np.zeros_like(g[..., :1])], axis=-1)
            d = (nb - g) / grid.dv
        out += fa * np.moveaxis(d, -1, ax)
    return out


def transport_upwind(f, force, mesh, grid):
    """T f = v.grad_x f + F.grad_v f with both derivatives upwinded."""
    return upwind_x(f, grid.v[_AXIS_X], mesh) + upwind_v(f, force, grid)


def transport_central(f, force, mesh, grid):
    """T f with central x-differences (periodic) and the central velocity gradient."""
    out = grid.v[_AXIS_X] * central_x(f, mesh)
    if np.any(force):
        for i in range(f.shape[0]):
            g = gradient(f[i], grid)
            out[i] += np.tensordot(force, g, axes=(0, 0))
    return out


def _moment_rows(q, grid):
    # (N_x, 5) array of int (1, v, |v|^2/2) q dv per cell
    w = grid.weight
    cols = [np.sum(q, axis=(1, 2, 3))]
    cols += [np.sum(q * grid.v[a], axis=(1, 2, 3)) for a in range(3)]
    cols.append(0.5 * np.sum(q * grid.speed2, axis=(1, 2, 3)))
    return np.stack(cols, axis=1) * w


def check_cfl(dt, mesh, grid, cfl=0.9):
    """Raise CFLViolation unless dt <= cfl dx / V_max."""
    bound = cfl * mesh.dx / grid.v_max
    if dt > bound:
        raise CFLViolation(f"time step {dt} exceeds the transport bound {bound:.6g}")


# -------------------------------------------------------------------- steps

def collision_step(fields, dt, config, infos=None):
    """Step 1: the penalised homogeneous step in every cell with transport remainders.

    Returns the starred fields; the tracked moments are advanced by their
    collision increments only.
    """
    scheme, mesh = config.scheme, config.mesh
    grid = scheme.model.grid
    if dt == 0:
        return fields
    eps = fields.eps
    psi1, psi2 = psi_factors(eps)
    aL = 1.0 - eps ** 2 * psi1
    aH = 1.0 - eps * psi2
    cells = [fields.cell(i) for i in range(fields.nx)]
    momL, momH, f0L, f0H = [], [], [], []
    for i, s in enumerate(cells):
        info = None if infos is None else infos[i]
        mL = aph.update_moments_L0(s, dt, scheme)
        mH = aph.update_moments_H0(s, dt, scheme)
        a, b = aph.step_f0(s, dt, scheme, mL, mH, info)
        momL.append(mL)
        momH.append(mH)
        f0L.append(a)
        f0H.append(b)
    f0L, f0H = np.stack(f0L), np.stack(f0H)
    extra_L = -aL * transport_central(f0L, fields.force_L, mesh, grid)
    extra_H = -aH * transport_central(f0H, fields.force_H, mesh, grid)
    f1L, f1H = [], []
    for i, s in enumerate(cells):
        info = None if infos is None else infos[i]
        a, b = aph.step_f1(s, dt, scheme, f0L[i], f0H[i], info, extra_L[i], extra_H[i])
        f1L.append(a)
        f1H.append(b)
        if info is not None:
            info.neg_nodes_L0 = aph.negative_nodes(f0L[i])
            info.neg_nodes_H0 = aph.negative_nodes(f0H[i])
    return replace(fields, fL0=f0L, fL1=np.stack(f1L), fH0=f0H, fH1=np.stack(f1H),
                   momL0=np.stack([m.as_array() for m in momL]),
                   momH0=np.stack([m.as_array() for m in momH]))


def transport_step(fields, dt, mesh, grid, cfl=0.9):
    """Step 2: explicit upwind transport of the skew-coupled f_0 / f_1 pairs."""
    check_cfl(dt, mesh, grid, cfl)
    if dt == 0:
        return fields
    psi1, psi2 = psi_factors(fields.eps)
    FL, FH = fields.force_L, fields.force_H
    fL0 = fields.fL0 - dt * transport_upwind(fields.fL1, FL, mesh, grid)
    fL1 = fields.fL1 - dt * psi1 * transport_upwind(fields.fL0, FL, mesh, grid)
    fH0 = fields.fH0 - fields.eps * dt * transport_upwind(fields.fH1, FH, mesh, grid)
    fH1 = fields.fH1 - dt * psi2 * transport_upwind(fields.fH0, FH, mesh, grid)
    return replace(fields, fL0=fL0, fL1=fL1, fH0=fH0, fH1=fH1)


def moment_transport_increments(fields, dt, mesh, grid):
    """(dP_L, dP_H) of shape (N_x, 5): -dt int phi T f_{L,1} and -eps dt int phi T f_{H,1}."""
    dL = -dt * _moment_rows(transport_upwind(fields.fL1, fields.force_L, mesh, grid), grid)
    dH = -fields.eps * dt * _moment_rows(transport_upwind(fields.fH1, fields.force_H, mesh, grid), grid)
    return dL, dH


def full_step(fields, config, infos=None):
    """Collision step, then transport step; moments get both increments."""
    dt, mesh = config.dt, config.mesh
    grid = config.scheme.model.grid
    check_cfl(dt, mesh, grid, config.cfl)
    dL, dH = moment_transport_increments(fields, dt, mesh, grid)
    star = collision_step(fields, dt, config, infos)
    out = transport_step(star, dt, mesh, grid, config.cfl)
    return replace(out, momL0=out.momL0 + dL, momH0=out.momH0 + dH, t=fields.t + dt)


def total_mass(fields, mesh, grid):
    """(sum_cells int f_{L,0} dv dx, sum_cells int f_{H,0} dv dx)."""
    w = grid.weight * mesh.dx
    return float(np.sum(fields.fL0)) * w, float(np.sum(fields.fH0)) * w


def cell_moments(f, grid):
    """compute_moments of every cell as an (N_x, 5) array."""
    return np.stack([compute_moments(f[i], grid).as_array() for i in range(f.shape[0])])
