"""
Boltzmann collision operators for the light/heavy mixture.

Angular convention
------------------
Collisions are parametrised by the unit vector Omega along the momentum
transfer, with kernel B(w, Omega) = b0 |w|^gamma / 2 (isotropic angular
factor).  For like particles

    v' = v - (w.Omega) Omega,   v'_* = v_* + (w.Omega) Omega,   w = v - v_*,

which is the same collision map as the centre-of-mass / sigma form with
sigma = w/|w| - 2 (w/|w| . Omega) Omega.  For the light-heavy pair, with
the heavy species stored in its scaled velocity v^H (physical velocity
eps v^H) and w = v^L - eps v^H,

    v'^L = v^L - 2 (w.Omega) Omega / (1 + eps^2),
    v'^H = v^H + 2 eps (w.Omega) Omega / (1 + eps^2).

In this parametrisation the eps -> 0 limit of the light operator is, node
by node, n^H q_0(f^L) with q_0(f)(v) = int B(v, Omega)(f(v - 2(v.Omega)Omega) - f(v)) dOmega,
and the heavy operator is divided by eps so that it tends to the drift
operator -2 grad f^H . int int B (v.Omega)^2 / |v|^2 v f^L.

The heavy operator evaluates its loss term at the reflected light
velocity (an exact change of variables), which makes the discrete
integral vanish at eps = 0 instead of leaving an interpolation defect that
the 1/eps factor would amplify.

Post-collision values come from trilinear interpolation, so the discrete
operators conserve mass, momentum and energy only up to interpolation
error.  With ``conservative=True`` each operator is projected onto the
moments of its weak form, which the node quadrature evaluates without
interpolation: zero for like particles, :func:`weak_moments_inter` for the
light-heavy pair and :func:`weak_moments_q0` for q_0.  The light-heavy
pair then exchanges momentum and energy exactly.  The projection weight
depends on the grid only (:func:`reference_weight`), so projected operators
stay linear in each argument and the split scheme can assemble them from
pieces without a consistency defect.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _boltzmann_kernels as _k
from .errors import InvalidParameter
from .phase_space import SphereRule, drift_operator, interpolate, sphere_rule


@dataclass(frozen=True)
class BoltzKernel:
    """Power-law kernel B(w, Omega) = b0 |w|^gamma / 2 with isotropic scattering.

    Parameters
    ----------
    gamma : float
        Velocity exponent in [-2, 1]; 0 is Maxwell molecules, 1 hard spheres.
    b0 : float
        Constant angular factor.
    sphere_order : int
        Order of the product sphere rule used for every angular integral.
    delta : float
        Regularisation of |w| for gamma < 0: |w|^2 -> |w|^2 + delta^2.
    """

    gamma: float = 0.0
    b0: float = 1.0
    sphere_order: int = 4
    delta: float = 1e-6
    model: str = field(default="boltzmann", init=False)

    def __post_init__(self):
        if not -2.0 <= self.gamma <= 1.0:
            raise InvalidParameter(f"gamma must lie in [-2, 1], got {self.gamma}")
        if not self.b0 > 0:
            raise InvalidParameter(f"b0 must be positive, got {self.b0}")
        if self.gamma < 0 and not self.delta > 0:
            raise InvalidParameter("delta must be positive for gamma < 0")

    @cached_property
    def sphere(self) -> SphereRule:
        return sphere_rule(self.sphere_order)

    def value(self, w2):
        """B as a function of |w|^2 (Omega-independent)."""
        w2 = np.asarray(w2, dtype=float)
        if self.gamma == 0:
            return np.full_like(w2, 0.5 * self.b0)
        if self.gamma < 0:
            return 0.5 * self.b0 * (w2 + self.delta ** 2) ** (0.5 * self.gamma)
        return 0.5 * self.b0 * w2 ** (0.5 * self.gamma)

    def _args(self):
        dirs, w = self.sphere.half
        return dirs, w, float(self.gamma), float(self.b0), float(self.delta)


def _check_eps(eps):
    if not (np.isfinite(eps) and eps > 0):
        raise InvalidParameter(f"eps must be positive, got {eps}")


def q_intra(f, g, k, grid, conservative=False):
    """Symmetric bilinear like-particle operator Q(f, g).

    Q(f, f) is the quadratic operator; Q(f, g) = Q(g, f).
    """
    grid.check(f, g)
    f = np.ascontiguousarray(f, dtype=float)
    g = np.ascontiguousarray(g, dtype=float)
    dirs, w, gamma, b0, delta = k._args()
    same = f is g or np.array_equal(f, g)
    gain = _k.intra_gain(f, g, same, grid.dv, dirs, w, gamma, b0, delta)
    wsum = float(np.sum(k.sphere.weights))
    nu_g = _k.collision_frequency(g, grid.dv, gamma, b0, delta, wsum)
    if same:
        loss = f * nu_g
    else:
        nu_f = _k.collision_frequency(f, grid.dv, gamma, b0, delta, wsum)
        loss = 0.5 * (f * nu_g + g * nu_f)
    q = gain - loss
    if conservative:
        q = conservative_projection(q, grid, weight=reference_weight(grid))
    return q


def reference_weight(grid):
    """Fixed Gaussian weight exp(-|v|^2 / (2 T_w)), T_w = (V_max / 4)^2.

    Depends on the grid only, so the projected like-particle operator stays
    exactly bilinear and symmetric.
    """
    t_w = (grid.v_max / 4.0) ** 2
    return np.exp(-0.5 * grid.speed2 / t_w)


def collision_frequency(g, k, grid):
    """Loss rate nu(v) = int int B g_* dOmega dv_*, so Q^-(g) = g nu."""
    grid.check(g)
    _, _, gamma, b0, delta = k._args()
    wsum = float(np.sum(k.sphere.weights))
    return _k.collision_frequency(np.ascontiguousarray(g, dtype=float), grid.dv, gamma, b0, delta, wsum)


def node_derivatives(f, grid):
    """Central first and second differences in index units (zero outside the grid).

    Returns (3, N, N, N) gradient and (6, N, N, N) Hessian components
    ordered xx, yy, zz, xy, xz, yz.
    """
    p = np.pad(f, 1)
    c = (slice(1, -1),) * 3

    def sh(a, d):
        idx = list(c)
        idx[a] = slice(1 + d, p.shape[a] - 1 + d)
        return tuple(idx)

    g = np.stack([0.5 * (p[sh(a, 1)] - p[sh(a, -1)]) for a in range(3)])
    diag = [p[sh(a, 1)] - 2.0 * f + p[sh(a, -1)] for a in range(3)]
    gp = [np.pad(g[a], 1) for a in range(3)]

    def mixed(a, b):
        return 0.5 * (gp[a][sh(b, 1)] - gp[a][sh(b, -1)])

    h = np.stack(diag + [mixed(0, 1), mixed(0, 2), mixed(1, 2)])
    return np.ascontiguousarray(g), np.ascontiguousarray(h)


def reflected_samples(f, dirs, grid):
    """f(v - 2 (v.Omega) Omega) for every direction, shape (K, N, N, N)."""
    v = np.moveaxis(grid.v, 0, -1)
    out = np.empty((len(dirs),) + grid.shape)
    for i, omega in enumerate(dirs):
        out[i] = interpolate(f, grid, v - 2.0 * (v @ omega)[..., None] * omega)
    return out


def _inter(fl, fh, eps, k, grid, out_light):
    grid.check(fl, fh)
    _check_eps(eps)
    dirs, w, gamma, b0, delta = k._args()
    wsum = float(np.sum(k.sphere.weights))
    fl = np.ascontiguousarray(fl, dtype=float)
    fh = np.ascontiguousarray(fh, dtype=float)
    flr = np.zeros((1, 1, 1, 1)) if out_light else reflected_samples(fl, dirs, grid)
    gd, hd = node_derivatives(fh, grid)
    return _k.inter_operator(
        fl, fh, flr, gd, hd,
        float(eps), out_light, grid.v_max, grid.dv, dirs, w, wsum, gamma, b0, delta)


def weak_moments_inter(fL, fH, eps, k, grid):
    """Exact quadrature moments of the light-heavy collision integral.

    Returns (light, heavy), each the 5-vector (mass, momentum, energy) of
    int Q phi with phi = (1, v, |v|^2): the light entry for Q^LH_eps, the
    heavy entry for the integral over v^L before the 1/eps of Q^HL_eps.
    The weak form needs no interpolation, so the two entries exchange
    momentum and energy exactly.
    """
    grid.check(fL, fH)
    _check_eps(eps)
    dirs, w, gamma, b0, delta = k._args()
    m = _k.inter_weak_moments(np.ascontiguousarray(fL, dtype=float), np.ascontiguousarray(fH, dtype=float),
                              float(eps), grid.v_max, grid.dv, dirs, w, gamma, b0, delta)
    tot = m.reshape(-1, 8).sum(axis=0)
    light = np.concatenate([[0.0], tot[0:3], [tot[3]]])
    heavy = np.concatenate([[0.0], tot[4:7], [tot[7]]])
    return light, heavy


def weak_moments_q0(f, k, grid):
    """Exact quadrature moments (mass, momentum, energy) of q_0(f): only momentum is nonzero."""
    grid.check(f)
    proj = np.tensordot(k.sphere.directions, grid.v, axes=(1, 0))  # (K, N, N, N)
    dens = k.value(grid.speed2) * f
    p = np.array([-2.0 * np.sum(np.tensordot(k.sphere.weights * k.sphere.directions[:, a], proj, axes=(0, 0))
                               * dens) for a in range(3)]) * grid.weight
    return np.concatenate([[0.0], p, [0.0]])


def q_inter_LH_eps(fL, fH, eps, k, grid, conservative=False):
    """Light-heavy operator Q^LH_eps(f^L, f^H)(v^L), f^H in scaled velocity.

    ``conservative`` projects the mass, momentum and energy of the result
    onto the exact quadrature values of
    :func:`weak_moments_inter`, removing the interpolation defects.
    """
    q = _inter(fL, fH, eps, k, grid, True)
    if not conservative:
        return q
    target = weak_moments_inter(fL, fH, eps, k, grid)[0]
    return conservative_projection(q, grid, weight=reference_weight(grid), target=target)


def q_inter_HL_eps(fH, fL, eps, k, grid, conservative=False):
    """Heavy-light operator Q^HL_eps(f^H, f^L)(v^H).

    The collision integral over v^L divided by eps, so that the momentum
    and energy exchanged satisfy

        int Q^LH v^L + int Q^HL v^H = 0,   int Q^LH |v^L|^2 + eps int Q^HL |v^H|^2 = 0.

    With ``conservative`` both identities hold to round-off.
    """
    q = _inter(fL, fH, eps, k, grid, False) / eps
    if not conservative:
        return q
    target = weak_moments_inter(fL, fH, eps, k, grid)[1] / eps
    return conservative_projection(q, grid, weight=reference_weight(grid), target=target)


def q0(f, k, grid, conservative=False):
    """Limit scattering operator q_0(f)(v) = int B(v, Omega)(f(v - 2(v.Omega)Omega) - f(v)) dOmega.

    The reflected point has the same speed as v, so it stays inside the
    ball of radius |v|.  q_0 conserves mass and energy but not momentum;
    ``conservative`` projects the three moments onto their exact
    quadrature values (:func:`weak_moments_q0`).
    """
    grid.check(f)
    v = np.moveaxis(grid.v, 0, -1)
    b = k.value(grid.speed2)
    out = np.zeros(grid.shape)
    for omega, wk in zip(k.sphere.directions, k.sphere.weights):
        c = v @ omega
        refl = v - 2.0 * c[..., None] * omega
        out += wk * (interpolate(f, grid, refl) - f)
    out *= b
    if not conservative:
        return out
    return conservative_projection(out, grid, weight=reference_weight(grid), target=weak_moments_q0(f, k, grid))


def q0_LH(fL, nH, k, grid):
    """Q_0^LH(f^L, f^H) = n^H q_0(f^L)."""
    if nH < 0:
        raise InvalidParameter(f"heavy density must be non-negative, got {nH}")
    if nH == 0:
        return grid.zeros()
    return nH * q0(fL, k, grid)


def drift_vector(fL, k, grid):
    """d = int int B(v, Omega) (v.Omega)^2 / |v|^2 v f^L(v) dOmega dv."""
    grid.check(fL)
    dirs, w = k.sphere.directions, k.sphere.weights
    v = grid.v
    s2 = grid.speed2
    proj = np.tensordot(dirs, v, axes=(1, 0))  # (K, N, N, N)
    ang = np.tensordot(w, proj ** 2, axes=(0, 0)) / s2
    dens = k.value(s2) * ang * fL
    return np.array([np.sum(dens * v[a]) for a in range(3)]) * grid.weight


def q0_HL(fH, fL, k, grid):
    """Q_0^HL(f^H, f^L) = -2 grad f^H . d(f^L)."""
    return drift_operator(fH, drift_vector(fL, k, grid), grid)


def bilinear(op, f, g):
    """Polarisation identity B(f, g) = [op(f + g) - op(f - g)] / 4."""
    return 0.25 * (op(f + g) - op(f - g))


def conservative_projection(q, grid, invariants=("mass", "momentum", "energy"), weight=None,
                            target=None):
    """Weighted least-squares correction enforcing int q phi = target for the chosen invariants.

    q_c = q - W C^T (C W C^T)^{-1} (C q - target), with C the rows phi(v) dv^3
    (phi = 1, v, |v|^2 in that order), W = diag(weight) (identity when
    None) and target zero when None.  A Gaussian weight keeps the correction
    away from the box corners.  With a fixed weight the map is affine in
    (q, target).  A zero weight returns q unchanged.
    """
    rows = []
    if "mass" in invariants:
        rows.append(np.ones(grid.size))
    if "momentum" in invariants:
        rows.extend(grid.v[a].ravel() for a in range(3))
    if "energy" in invariants:
        rows.append(grid.speed2.ravel())
    c = np.array(rows) * grid.weight
    qf = q.ravel()
    w = np.ones(qf.size) if weight is None else np.asarray(weight, dtype=float).ravel()
    if not np.any(w):
        return np.array(q, dtype=float)
    cw = c * w
    rhs = c @ qf
    if target is not None:
        t = np.asarray(target, dtype=float)
        if t.size == 5 and len(rows) != 5:
            keep = [0] * ("mass" in invariants) + [1, 2, 3] * ("momentum" in invariants) \
                + [4] * ("energy" in invariants)
            t = t[keep]
        rhs = rhs - t
    lam = np.linalg.solve(cw @ c.T, rhs)
    return (qf - cw.T @ lam).reshape(q.shape)
