"""
Penalty operators that make the stiff collision terms solvable explicitly.

Three penalties are provided:

* BGK relaxation P(f) = beta (M - f), inverted pointwise;
* a constant-rate linear penalty mu f, used for the O(eps) correction fields;
* the linear Fokker-Planck operator P_FP(f) = div(M grad(f / M)), inverted
  with conjugate gradients on its symmetrised form
  P~ h = M^{-1/2} div(M grad(h M^{-1/2})), h = f / sqrt(M).

In one dimension P~ is discretised as

    (P~ h)_j = (h_{j+1} - (s_{j+1} + s_{j-1}) / s_j h_j + h_{j-1}) / dv^2,  s = sqrt(M),

which is the conservative flux difference with face values M_{j+1/2} =
sqrt(M_j M_{j+1}).  Faces on the boundary of the box carry no flux, so the
neighbour terms outside the grid are dropped.  In 3D the operator is the
sum of the three axis stencils; it is symmetric, negative semidefinite and
has sqrt(M) in its kernel.
"""

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from . import collision_boltzmann as cb
from . import collision_fpl as cf
from .errors import InvalidParameter, NoConvergence


@dataclass(frozen=True)
class PenaltyConfig:
    """Rates and solver settings shared by the penalised steps.

    Parameters
    ----------
    beta_rule : {"linearised", "ratio"}
        How the scheme picks the BGK rate.  "linearised" uses twice the
        maximum loss rate, an upper bound of the linearised operator at the
        Maxwellian; "ratio" uses :func:`bgk_beta`, never below that bound.
    beta_default : float
        BGK rate used when no node gives usable information.
    beta_floor : float
        Nodes with |f - M| below ``beta_floor * max(M)`` are ignored by
        :func:`bgk_beta`.
    beta0 : float
        Safety factor of the Fokker-Planck penalty, beta = beta0 max rho(D(f)).
    mu_margin : float
        Factor applied to the strict linear-penalty bounds.
    mu_min : float
        Lower bound for mu when the strict bound vanishes.
    cg_rtol, cg_maxiter : float, int
        Relative residual target and iteration cap of the CG solves.
    """

    beta_rule: str = "linearised"
    beta_default: float = 1.0
    beta_floor: float = 1e-12
    beta0: float = 1.0
    mu_margin: float = 1.1
    mu_min: float = 1e-8
    cg_rtol: float = 1e-10
    cg_maxiter: int = 5000

    def __post_init__(self):
        if self.beta_rule not in ("linearised", "ratio"):
            raise InvalidParameter(f"unknown beta_rule {self.beta_rule!r}")
        if not self.beta_default > 0:
            raise InvalidParameter(f"beta_default must be positive, got {self.beta_default}")
        if not self.beta0 > 0.5:
            raise InvalidParameter(f"beta0 must exceed 1/2, got {self.beta0}")
        if not self.mu_margin >= 1.0:
            raise InvalidParameter(f"mu_margin must be at least 1, got {self.mu_margin}")
        if not self.mu_min > 0:
            raise InvalidParameter(f"mu_min must be positive, got {self.mu_min}")
        if not (self.cg_rtol > 0 and self.cg_maxiter >= 1):
            raise InvalidParameter("CG tolerance and iteration cap must be positive")


# ---------------------------------------------------------------- BGK penalty

def _max_ratio(num, den, floor):
    mask = np.abs(den) >= floor
    if not np.any(mask):
        return None
    r = float(np.max(np.abs(num[mask] / den[mask])))
    return r if r > 0 else None


def bgk_beta(f, M, Qf, floor=1e-12, history=None, default=1.0):
    """Relaxation rate beta = max |Q(f) / (f - M)| over informative nodes.

    Nodes where |f - M| < floor * max|M| are skipped.  If none is left and
    ``history = (f_prev, Q_prev)`` is given, the rate falls back to
    max |(Q(f) - Q_prev) / (f - f_prev)|; otherwise ``default`` is returned.
    """
    f, M, Qf = (np.asarray(a, dtype=float) for a in (f, M, Qf))
    scale = floor * float(np.max(np.abs(M)))
    beta = _max_ratio(Qf, f - M, scale)
    if beta is None and history is not None:
        f_prev, q_prev = history
        beta = _max_ratio(Qf - q_prev, f - f_prev, scale)
    return beta if beta is not None else float(default)


def bgk_implicit_update(rhs, M_next, c):
    """Solve f - c (M_next - f) = rhs pointwise."""
    if c < 0:
        raise InvalidParameter(f"penalty coefficient must be non-negative, got {c}")
    return (rhs + c * M_next) / (1.0 + c)


# ------------------------------------------------------------- linear penalty

def _spectral_radius(d):
    """Largest |eigenvalue| of a (3, 3, N, N, N) field of symmetric matrices."""
    mats = np.moveaxis(d, (0, 1), (-2, -1))
    return np.max(np.abs(np.linalg.eigvalsh(mats)), axis=-1)


def linear_mu(kernel, grid, mode, g=None):
    """Strict rate for the linear penalty, maximised over the grid nodes.

    Modes
    -----
    ``"boltzmann-q0"``
        max_v int B(v, Omega) dOmega, the loss rate of q_0.
    ``"boltzmann-loss"``
        max_v nu(v), nu = int int B g_* dOmega dv_* the loss rate of Q(., g).
    ``"fpl"``
        max_v rho(D(g)), D(g) = int B S g_* dv_*; the caller applies any
        factor such as 1/2 or beta0.
    """
    if mode == "boltzmann-q0":
        return float(np.max(kernel.value(grid.speed2)) * np.sum(kernel.sphere.weights))
    if g is None:
        raise InvalidParameter(f"mode {mode!r} needs a field g")
    if mode == "boltzmann-loss":
        return float(np.max(cb.collision_frequency(g, kernel, grid)))
    if mode == "fpl":
        if not np.any(g):
            return 0.0
        return float(np.max(_spectral_radius(cf.diffusion_matrix(g, kernel, grid))))
    raise InvalidParameter(f"unknown linear-penalty mode {mode!r}")


# ----------------------------------------------------- Fokker-Planck penalty

class SymmetrizedFP:
    """The operator P~ for a fixed positive Maxwellian M."""

    def __init__(self, M, grid):
        grid.check(M)
        if not np.all(M > 0):
            raise InvalidParameter("Fokker-Planck penalty needs M > 0 at every node")
        self.grid = grid
        self.sqrt_m = np.sqrt(M)
        s = self.sqrt_m
        diag = np.zeros(grid.shape)
        for a in range(3):
            sa = np.moveaxis(s, a, 0)
            da = np.moveaxis(diag, a, 0)
            da[:-1] -= sa[1:] / sa[:-1]
            da[1:] -= sa[:-1] / sa[1:]
        self.diag = diag / grid.dv ** 2

    def apply(self, h):
        """P~ h."""
        out = self.diag * h
        inv = 1.0 / self.grid.dv ** 2
        for a in range(3):
            ha = np.moveaxis(h, a, 0)
            oa = np.moveaxis(out, a, 0)
            oa[:-1] += inv * ha[1:]
            oa[1:] += inv * ha[:-1]
        return out

    def apply_f(self, f):
        """P_FP f = sqrt(M) P~ (f / sqrt(M)) as a difference of face fluxes.

        With s = sqrt(M) the face flux is F_{j+1/2} = (s_j f_{j+1} / s_{j+1}
        - s_{j+1} f_j / s_j) / dv^2 and (P_FP f)_j = F_{j+1/2} - F_{j-1/2},
        so the node sum telescopes and mass is conserved to round-off.
        """
        out = np.zeros(self.grid.shape)
        inv = 1.0 / self.grid.dv ** 2
        for a in range(3):
            sa = np.moveaxis(self.sqrt_m, a, 0)
            fa = np.moveaxis(f, a, 0)
            flux = inv * (sa[:-1] / sa[1:] * fa[1:] - sa[1:] / sa[:-1] * fa[:-1])
            oa = np.moveaxis(out, a, 0)
            oa[:-1] += flux
            oa[1:] -= flux
        return out


def fp_penalty_apply(f, M, grid):
    """Linear Fokker-Planck operator div(M grad(f / M)) in conservative form."""
    grid.check(f)
    return SymmetrizedFP(M, grid).apply_f(f)


def cg_solve(apply, rhs, rtol=1e-10, maxiter=5000, x0=None):
    """Conjugate gradients for a symmetric positive definite operator on grid fields.

    Raises NoConvergence when the relative residual stays above ``rtol``
    after ``maxiter`` iterations.
    """
    shape = rhs.shape
    n = rhs.size
    op = LinearOperator((n, n), matvec=lambda x: apply(x.reshape(shape)).ravel(), dtype=float)
    b = rhs.ravel()
    if not np.any(b):
        return np.zeros(shape)
    count = [0]

    def _tick(_):
        count[0] += 1

    x, info = cg(op, b, x0=None if x0 is None else x0.ravel(), rtol=rtol, atol=0.0,
                 maxiter=maxiter, callback=_tick)
    if info != 0:
        res = np.linalg.norm(b - op @ x) / np.linalg.norm(b)
        raise NoConvergence(f"CG stopped after {count[0]} iterations at relative residual {res:.3e}",
                            iterations=count[0], residual=res)
    return x.reshape(shape)


def fp_implicit_solve(rhs, M_next, c, grid, rtol=1e-10, maxiter=5000):
    """Solve (I - c P_FP) f = rhs with P_FP built on M_next.

    The system is rewritten for h = f / sqrt(M_next) as (I - c P~) h =
    rhs / sqrt(M_next), which is symmetric positive definite.
    """
    if c < 0:
        raise InvalidParameter(f"penalty coefficient must be non-negative, got {c}")
    grid.check(rhs)
    if c == 0:
        return np.array(rhs, dtype=float)
    op = SymmetrizedFP(M_next, grid)
    b = rhs / op.sqrt_m
    h = cg_solve(lambda x: x - c * op.apply(x), b, rtol, maxiter, x0=b)
    h = restore_component(h, b, op.sqrt_m)
    return op.sqrt_m * h


def restore_component(x, b, k):
    """Replace the component of ``x`` along ``k`` with that of ``b``.

    For a symmetric operator I - c L with L k = 0 the exact solution of
    (I - c L) x = b has <k, x> = <k, b>.
    """
    return x + k * (np.sum(k * b) - np.sum(k * x)) / np.sum(k * k)
