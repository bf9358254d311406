"""
Velocity grids, quadrature, interpolation and moments.

All distribution functions are plain ``numpy`` arrays of shape ``(N, N, N)``
sampled on the nodes of a :class:`VelocityGrid`.  Both species live on the
same grid; the heavy species is stored in its own scaled velocity variable.

Grid layout::

    v_j = (j + 1/2) * dv - V_max,   j = 0 .. N-1,   dv = 2 V_max / N

N is even, so the origin is never a node and the node set is symmetric
under v -> -v.  Integrals use the midpoint rule with weight dv**3, which
makes every odd moment of an even field vanish up to round-off.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DegenerateDensity, GridMismatch, InvalidParameter


@dataclass(frozen=True)
class VelocityGrid:
    """Uniform cubic velocity lattice on [-V_max, V_max]^3.

    Parameters
    ----------
    v_max : float
        Half-width of the cubic domain.
    n : int
        Points per axis, even and at least 4.
    """

    v_max: float
    n: int

    def __post_init__(self):
        if not (np.isfinite(self.v_max) and self.v_max > 0):
            raise InvalidParameter(f"v_max must be positive, got {self.v_max}")
        if int(self.n) != self.n or self.n < 4 or self.n % 2:
            raise InvalidParameter(f"points per axis must be an even integer >= 4, got {self.n}")

    @property
    def dv(self):
        return 2.0 * self.v_max / self.n

    @property
    def shape(self):
        return (self.n, self.n, self.n)

    @property
    def size(self):
        return self.n ** 3

    @property
    def weight(self):
        """Midpoint quadrature weight of one node."""
        return self.dv ** 3

    @cached_property
    def nodes(self):
        """1D node coordinates along one axis."""
        return (np.arange(self.n) + 0.5) * self.dv - self.v_max

    @cached_property
    def v(self):
        """Node coordinates as an array of shape (3, N, N, N)."""
        return np.stack(np.meshgrid(self.nodes, self.nodes, self.nodes, indexing="ij"))

    @cached_property
    def speed2(self):
        """|v|^2 at every node."""
        return np.sum(self.v ** 2, axis=0)

    def zeros(self):
        return np.zeros(self.shape)

    def check(self, *fields):
        """Raise GridMismatch unless every field has this grid's shape."""
        for f in fields:
            if np.shape(f) != self.shape:
                raise GridMismatch(f"field of shape {np.shape(f)} does not match grid {self.shape}")


@dataclass(frozen=True)
class SphereRule:
    """Product quadrature on the unit sphere.

    ``directions`` has shape (K, 3), ``weights`` shape (K,) and sums to 4*pi.
    """

    directions: np.ndarray
    weights: np.ndarray
    order: int

    @property
    def size(self):
        return len(self.weights)

    def integrate(self, values):
        """Quadrature of samples taken at ``directions`` (leading axis K)."""
        return np.tensordot(self.weights, values, axes=(0, 0))

    @cached_property
    def half(self):
        """One representative of every antipodal pair, weights doubled.

        Integrands that are even under Omega -> -Omega (all collision
        integrands here depend on Omega only through (w.Omega) Omega) can be
        summed over this half rule at half the cost with identical results.
        """
        d, w = self.directions, self.weights
        mu = d[:, 2]
        phi = np.mod(np.arctan2(d[:, 1], d[:, 0]), 2 * np.pi)
        tol = 1e-12
        keep = (mu > tol) | ((np.abs(mu) <= tol) & (phi < np.pi - tol))
        return np.ascontiguousarray(d[keep]), 2.0 * w[keep]


def sphere_rule(order):
    """Gauss-Legendre in cos(theta) times uniform azimuth (2*order points).

    The rule is antipodally symmetric and integrates spherical polynomials
    of degree up to 2*order - 1 exactly.
    """
    if int(order) != order or order < 2:
        raise InvalidParameter(f"sphere rule order must be an integer >= 2, got {order}")
    order = int(order)
    mu, wmu = np.polynomial.legendre.leggauss(order)
    n_phi = 2 * order
    phi = np.arange(n_phi) * (2 * np.pi / n_phi)
    mu_g, phi_g = np.meshgrid(mu, phi, indexing="ij")
    s = np.sqrt(1.0 - mu_g ** 2)
    dirs = np.stack([s * np.cos(phi_g), s * np.sin(phi_g), mu_g], axis=-1).reshape(-1, 3)
    w = np.repeat(wmu, n_phi) * (2 * np.pi / n_phi)
    return SphereRule(dirs, w, order)


@dataclass(frozen=True)
class MomentVector:
    """Density P0, momentum P1 and energy P2 = int |v|^2/2 f."""

    p0: float
    p1: np.ndarray
    p2: float

    def __post_init__(self):
        object.__setattr__(self, "p1", np.broadcast_to(np.asarray(self.p1, dtype=float), (3,)).copy())

    def macro(self):
        """(n, u, T) from the moments."""
        return temperature_from_moments(self.p0, self.p1, self.p2)

    def as_array(self):
        return np.concatenate([[self.p0], self.p1, [self.p2]])

    @classmethod
    def from_array(cls, a):
        a = np.asarray(a, dtype=float)
        return cls(a[0], a[1:4], a[4])


def integrate(f, grid, weight=None):
    """Midpoint approximation of int f(v) weight(v) dv.

    ``weight`` may be None (constant one), an array broadcastable to the
    grid, or a callable receiving the (3, N, N, N) node coordinates.
    """
    grid.check(f)
    if weight is None:
        return float(np.sum(f) * grid.weight)
    if callable(weight):
        weight = weight(grid.v)
    return float(np.sum(f * weight) * grid.weight)


def compute_moments(f, grid):
    grid.check(f)
    w = grid.weight
    p0 = np.sum(f) * w
    p1 = np.array([np.sum(f * grid.v[a]) for a in range(3)]) * w
    p2 = 0.5 * np.sum(f * grid.speed2) * w
    return MomentVector(float(p0), p1, float(p2))


def temperature_from_moments(p0, p1, p2):
    """Solve P2 = P0 |u|^2 / 2 + 3 P0 T / 2 for (n, u, T)."""
    if not p0 > 0:
        raise DegenerateDensity(f"density must be positive, got {p0}")
    u = np.asarray(p1, dtype=float) / p0
    T = (2.0 * p2 / p0 - np.dot(u, u)) / 3.0
    if not T > 0:
        raise DegenerateDensity(f"temperature must be positive, got {T}")
    return float(p0), u, float(T)


def macro(f, grid):
    """(n, u, T) of a field."""
    return compute_moments(f, grid).macro()


def maxwellian(grid, n, u, T):
    """n / (2 pi T)^{3/2} exp(-|v - u|^2 / (2T)) sampled at the nodes."""
    if not T > 0:
        raise InvalidParameter(f"temperature must be positive, got {T}")
    if n < 0:
        raise InvalidParameter(f"density must be non-negative, got {n}")
    u = np.broadcast_to(np.asarray(u, dtype=float), (3,)).reshape(3, 1, 1, 1)
    r2 = np.sum((grid.v - u) ** 2, axis=0)
    return n / (2 * np.pi * T) ** 1.5 * np.exp(-r2 / (2 * T))


def maxwellian_from_moments(grid, mom):
    """Maxwellian of the moments, rescaled so its discrete density is exactly p0.

    The node sum of a sampled Maxwellian depends on u and T, so without the
    rescaling a penalty pulling f towards M would move mass whenever the
    tracked momentum or energy changes.
    """
    n, u, T = mom.macro()
    m = maxwellian(grid, n, u, T)
    mass = float(np.sum(m)) * grid.weight
    return m * (n / mass) if mass > 0 else m


def interpolate(f, grid, points):
    """Trilinear interpolation of a grid field at arbitrary points.

    ``points`` has shape (..., 3).  The field is extended by zero outside
    the node range and points outside [-V_max, V_max]^3 return 0 (cutoff
    convention).
    """
    grid.check(f)
    p = np.asarray(points, dtype=float)
    s = (p + grid.v_max) / grid.dv - 0.5
    i0 = np.floor(s).astype(np.int64)
    t = s - i0
    inside = np.all(np.abs(p) <= grid.v_max, axis=-1)
    padded = np.pad(f, 1)
    idx = i0 + 1
    out = np.zeros(p.shape[:-1])
    for cx in (0, 1):
        wx = t[..., 0] if cx else 1 - t[..., 0]
        ix = np.clip(idx[..., 0] + cx, 0, grid.n + 1)
        for cy in (0, 1):
            wy = t[..., 1] if cy else 1 - t[..., 1]
            iy = np.clip(idx[..., 1] + cy, 0, grid.n + 1)
            for cz in (0, 1):
                wz = t[..., 2] if cz else 1 - t[..., 2]
                iz = np.clip(idx[..., 2] + cz, 0, grid.n + 1)
                out += wx * wy * wz * padded[ix, iy, iz]
    return np.where(inside, out, 0.0)


def _diff_matrix(n, h):
    """1D gradient matrix: central inside, second-order one-sided at both ends.

    It differentiates quadratics exactly, so the divergence built from its
    adjoint conserves mass, momentum and energy of pair-antisymmetric fluxes.
    """
    d = np.zeros((n, n))
    if n < 3:
        d[0, 0], d[0, -1] = -1.0 / h, 1.0 / h
        d[-1] = d[0]
        return d
    d[0, :3] = np.array([-1.5, 2.0, -0.5]) / h
    d[-1, -3:] = np.array([0.5, -2.0, 1.5]) / h
    for i in range(1, n - 1):
        d[i, i - 1], d[i, i + 1] = -0.5 / h, 0.5 / h
    return d


def _apply_along(mat, f, axis):
    return np.moveaxis(np.tensordot(mat, f, axes=(1, axis)), 0, axis)


def gradient(f, grid):
    """Second-order central gradient (one-sided at the faces), shape (3, N, N, N)."""
    d = _diff_matrix(grid.n, grid.dv)
    return np.stack([_apply_along(d, f, a) for a in range(3)])


def gradient_norm2(grid):
    """Largest eigenvalue of -divergence(gradient(.)) for a unit diffusion tensor."""
    d = _diff_matrix(grid.n, grid.dv)
    return 3.0 * float(np.linalg.eigvalsh(d.T @ d)[-1])


def divergence(flux, grid):
    """Conservative discrete divergence, the negative adjoint of :func:`gradient`.

    Inside the domain this is the central difference of the node fluxes,
    i.e. the difference of the averaged half-node fluxes.  Because it is
    minus the transpose of a gradient that annihilates constants, the sum
    of the result over all nodes is zero to round-off (zero boundary flux),
    and ``divergence(K @ gradient(f))`` is symmetric negative semidefinite
    whenever K is symmetric positive semidefinite.
    """
    dt = -_diff_matrix(grid.n, grid.dv).T
    return sum(_apply_along(dt, flux[a], a) for a in range(3))


def drift_operator(f, d, grid):
    """-2 d . grad f for a constant vector d, written as -2 div(d f).

    The divergence form keeps int result dv = 0 to round-off.
    """
    grid.check(f)
    d = np.asarray(d, dtype=float)
    flux = np.stack([d[a] * f for a in range(3)])
    return -2.0 * divergence(flux, grid)
