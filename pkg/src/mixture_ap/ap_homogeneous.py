"""
Asymptotic-preserving integrator for the space-homogeneous mixture

    d/dt f^L = eps^-2 [Q^LL(f^L, f^L) + Q^LH_eps(f^L, f^H)],
    d/dt f^H = eps^-1 [Q^HH(f^H, f^H) + Q^HL_eps(f^H, f^L)].

Each species is split as f = f_0 + eps f_1.  One step runs, in this order:

(a) advance the moments of f_{L,0}, build M_{L,0}^{n+1}, update f_{L,0};
(b) the same for the heavy species;
(c) update f_{L,1}, which needs the new f_{L,0}, f_{H,0};
(d) update f_{H,1}, which also needs the new f_{L,1}.

Stiff like-particle terms are penalised with BGK relaxation (Boltzmann) or
a linear Fokker-Planck operator (Landau).  The correction fields use the
linear penalty mu (f_1^n - f_1^{n+1}) for the like-particle bracket and
treat the limit cross operator q_0 acting on f_{L,1}^{n+1} implicitly:
pointwise with a constant-rate penalty for Boltzmann, by conjugate
gradients on the symmetric Landau limit operator otherwise.  The cost of a
step does not depend on eps.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import penalty as pn
from .collision_fpl import q0_fpl
from .errors import InvalidParameter
from .operators import CollisionModel
from .collision_boltzmann import conservative_projection
from .phase_space import MomentVector, compute_moments, gradient_norm2, maxwellian, maxwellian_from_moments


@dataclass(frozen=True)
class SplitState:
    """f^L = fL0 + eps fL1, f^H = fH0 + eps fH1 plus the tracked f_0 moments."""

    fL0: np.ndarray
    fL1: np.ndarray
    fH0: np.ndarray
    fH1: np.ndarray
    momL0: MomentVector
    momH0: MomentVector
    eps: float
    t: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.eps) and self.eps > 0):
            raise InvalidParameter(f"eps must be positive, got {self.eps}")
        shape = np.shape(self.fL0)
        for f in (self.fL1, self.fH0, self.fH1):
            if np.shape(f) != shape:
                raise InvalidParameter("all four fields must share one grid")

    @classmethod
    def from_maxwellians(cls, grid, eps, light=(1.0, 0.0, 1.0), heavy=(1.0, 0.0, 1.0),
                         well_prepared=False):
        """Split state with f_0 = Maxwellians and f_1 = 0.

        With ``well_prepared`` the light correction starts from the profile
        fL1 = M_{L,0} (u_H . v) / T_{L,0} that balances the leading-order
        light/heavy friction.
        """
        fL0 = maxwellian(grid, *light)
        fH0 = maxwellian(grid, *heavy)
        fL1 = np.zeros(grid.shape)
        if well_prepared:
            u_h = np.broadcast_to(np.asarray(heavy[1], dtype=float), (3,))
            fL1 = fL0 * np.tensordot(u_h, grid.v, axes=(0, 0)) / light[2]
        return cls(fL0, fL1, fH0, np.zeros(grid.shape),
                   compute_moments(fL0, grid), compute_moments(fH0, grid), eps)


@dataclass(frozen=True)
class SchemeConfig:
    """Step size, operators and penalty settings of the AP scheme.

    Parameters
    ----------
    dt : float
    model : CollisionModel
    penalty : PenaltyConfig
    heavy_moment_power : int
        The heavy moment updates use dt / eps**heavy_moment_power; 1 is
        the value obtained by integrating the heavy f_0 update, 2 the
        alternative form.
    beta_L, beta_H : float or None
        Fixed BGK / Fokker-Planck rates; computed every step when None.
    mu_L, mu_H, mu_q0 : float or None
        Fixed linear-penalty rates; computed every step when None.
    light_momentum : {"penalised", "explicit"}
        "explicit" advances P_1 of f_{L,0} with the forward-Euler update
        P_1 += dt/eps^2 int v Q_0^LH(f_{L,0}^n, f_{H,0}^n).  Its friction term
        is stiff, so for dt kappa / eps^2 > 2 (kappa the friction rate of
        q_0) any odd perturbation grows without bound.  "penalised" adds
        kappa' (P_1^n - P_1^{n+1}) inside the bracket, kappa' = mu_margin
        n_H kappa, which is consistent to O(dt) and stable for every eps.
    """

    dt: float
    model: CollisionModel
    penalty: pn.PenaltyConfig = field(default_factory=pn.PenaltyConfig)
    heavy_moment_power: int = 1
    beta_L: float = None
    beta_H: float = None
    mu_L: float = None
    mu_H: float = None
    mu_q0: float = None
    light_momentum: str = "penalised"

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise InvalidParameter(f"time step must be positive, got {self.dt}")
        if self.heavy_moment_power not in (1, 2):
            raise InvalidParameter("heavy_moment_power must be 1 or 2")
        if self.light_momentum not in ("penalised", "explicit"):
            raise InvalidParameter(f"unknown light momentum update {self.light_momentum!r}")


@dataclass
class StepInfo:
    """Diagnostics of the last step."""

    beta_L: float = 0.0
    beta_H: float = 0.0
    mu_L: float = 0.0
    mu_H: float = 0.0
    mu_q0: float = 0.0
    neg_nodes_L0: int = 0
    neg_nodes_H0: int = 0


# ------------------------------------------------------------------- moments

def _first_moment(q, grid):
    return np.array([np.sum(q * grid.v[a]) for a in range(3)]) * grid.weight


def update_moments_L0(state, dt, config):
    """P0, P2 unchanged; P1 += dt/eps^2 int v Q_0^LH(fL0, fH0) (see ``light_momentum``)."""
    m, grid = config.model, config.model.grid
    mom = state.momL0
    if dt == 0:
        return mom
    c = dt / state.eps ** 2
    j = _first_moment(m.q0_LH(state.fL0, state.fH0), grid)
    if config.light_momentum == "explicit":
        return MomentVector(mom.p0, mom.p1 + c * j, mom.p2)
    _, _, T = mom.macro()
    kappa = config.penalty.mu_margin * m.density(state.fH0) * m.friction_rate(T)
    return MomentVector(mom.p0, mom.p1 + c * j / (1.0 + c * kappa), mom.p2)


def update_moments_H0(state, dt, config):
    """P0 unchanged; P1, P2 += dt/eps^p int (v, |v|^2/2) q0_HL(fH0, fL0)."""
    m, grid = config.model, config.model.grid
    mom = state.momH0
    if dt == 0:
        return mom
    q = m.q0_HL(state.fH0, state.fL0)
    c = dt / state.eps ** config.heavy_moment_power
    p1 = mom.p1 + c * _first_moment(q, grid)
    p2 = mom.p2 + c * 0.5 * float(np.sum(q * grid.speed2)) * grid.weight
    return MomentVector(mom.p0, p1, p2)


# ------------------------------------------------------------------ f_0 step

def _penalised_f0(f, mom_old, mom_new, stiff_q, extra, c, beta_fixed, config, kernel):
    """One penalised update of a thermalised field.

    Solves (f^+ - f)/dt = eps^-p [Q(f) - P(f) + P^+(f^+) + extra] where c =
    dt/eps^p and P is BGK relaxation (Boltzmann) or beta P_FP (Landau).
    Returns the new field and the rate used.
    """
    model, grid, cfg = config.model, config.model.grid, config.penalty
    m_old = maxwellian_from_moments(grid, mom_old)
    m_new = maxwellian_from_moments(grid, mom_new)
    if model.is_fpl:
        beta = beta_fixed
        if beta is None:
            beta = cfg.beta0 * pn.linear_mu(kernel, grid, "fpl", g=f)
            beta = max(beta, cfg.mu_min)
        free = f + c * (stiff_q + extra)
        rhs = free - c * beta * pn.fp_penalty_apply(f, m_old, grid)
        out = pn.fp_implicit_solve(rhs, m_new, c * beta, grid, cfg.cg_rtol, cfg.cg_maxiter)
        # the resolvent does not preserve energy and nothing damps it, so the
        # penalty pair is kept moment-neutral: mass and energy as without it.
        # Every operator conserves mass, so the mass target is that of f,
        # which keeps their round-off out of the c-amplified update.
        rows = np.array([np.sum(f), np.sum(free * grid.speed2)]) * grid.weight
        return conservative_projection(out, grid, ("mass", "energy"), weight=m_new, target=rows), beta
    beta = beta_fixed
    if beta is None:
        # grad Q(M) h = 2 Q(M, h), so twice the loss rate bounds it
        beta = 2.0 * pn.linear_mu(kernel, grid, "boltzmann-loss", g=f)
        if cfg.beta_rule == "ratio":
            beta = max(beta, pn.bgk_beta(f, m_old, stiff_q, cfg.beta_floor, default=cfg.beta_default))
    rhs = f + c * (stiff_q - beta * (m_old - f) + extra)
    return pn.bgk_implicit_update(rhs, m_new, c * beta), beta


def step_f0(state, dt, config, momL0_next, momH0_next, info=None):
    """Steps (a) and (b): new fL0 and fH0 from the already advanced moments."""
    model = config.model
    eps = state.eps
    qll = model.q_LL(state.fL0)
    qlh = model.q0_LH(state.fL0, state.fH0)
    fL0, bL = _penalised_f0(state.fL0, state.momL0, momL0_next, qll, qlh,
                            dt / eps ** 2, config.beta_L, config, model.kernel_LL)
    qhh = model.q_HH(state.fH0)
    fH0, bH = _penalised_f0(state.fH0, state.momH0, momH0_next, qhh, model.q0_HL(state.fH0, state.fL0),
                            dt / eps, config.beta_H, config, model.kernel_HH)
    if info is not None:
        info.beta_L, info.beta_H = bL, bH
    return fL0, fH0


# ------------------------------------------------------------------ f_1 step

def _mu_like(f0, kernel, config, fixed):
    if fixed is not None:
        return fixed
    model, cfg = config.model, config.penalty
    if model.is_fpl:
        # the scalar penalty must bound the discrete diffusion div(D grad .)
        mu = 0.5 * pn.linear_mu(kernel, model.grid, "fpl", g=f0) * gradient_norm2(model.grid)
    else:
        mu = pn.linear_mu(kernel, model.grid, "boltzmann-loss", g=f0)
    return max(cfg.mu_margin * mu, cfg.mu_min)


def _mu_q0(config):
    if config.mu_q0 is not None:
        return config.mu_q0
    model = config.model
    if model.is_fpl:
        return 0.0
    return config.penalty.mu_margin * pn.linear_mu(model.kernel_LH, model.grid, "boltzmann-q0")


def _polarised(op, f0, f1):
    # (Q(f0 + f1) - Q(f0 - f1)) / 2, i.e. twice the symmetric bilinear form
    return 0.5 * (op(f0 + f1) - op(f0 - f1))


def step_f1(state, dt, config, fL0_next, fH0_next, info=None, extra_L=None, extra_H=None):
    """Steps (c) and (d): new fL1 and fH1.

    Light correction (c = dt/eps^2, n_H the heavy density):

        (fL1^+ - fL1)/dt = eps^-2 [ (Q^LH_eps - Q_0^LH)(fL0^+, fH0^+) / eps
            + (Q^LL(fL0 + fL1) - Q^LL(fL0 - fL1)) / 2 + mu (fL1 - fL1^+)
            + eps Q^LL(fL1) + Q^LH_eps(fL0, fH1) + (Q^LH_eps - Q_0^LH)(fL1, fH0)
            + Q_0^LH(fL1^+, fH0^+) + eps Q^LH_eps(fL1, fH1) ]

    Heavy correction (c = dt/eps):

        (fH1^+ - fH1)/dt = eps^-1 [ (Q^HL_eps - Q_0^HL)(fH0^+, fL0^+) / eps
            + (Q^HH(fH0 + fH1) - Q^HH(fH0 - fH1)) / 2 + mu (fH1 - fH1^+)
            + eps Q^HH(fH1) + Q^HL_eps(fH0^+, fL1^+) + Q^HL_eps(fH1, fL0)
            + eps Q^HL_eps(fH1, fL1) ]

    ``extra_L`` / ``extra_H`` are added inside the brackets (used by the
    space-dependent scheme for its transport corrections).
    """
    model, grid, cfg = config.model, config.model.grid, config.penalty
    eps = state.eps
    fL0, fL1, fH0, fH1 = state.fL0, state.fL1, state.fH0, state.fH1
    nH = model.density(fH0_next)

    # light correction
    c = dt / eps ** 2
    mu_l = _mu_like(fL0, model.kernel_LL, config, config.mu_L)
    src = (model.q_LH(fL0_next, fH0_next, eps) - model.q0_LH(fL0_next, fH0_next)) / eps
    src += _polarised(model.q_LL, fL0, fL1)
    src += eps * model.q_LL(fL1)
    src += model.q_LH(fL0, fH1, eps)
    src += model.q_LH(fL1, fH0, eps) - model.q0_LH(fL1, fH0)
    src += eps * model.q_LH(fL1, fH1, eps)
    if extra_L is not None:
        src += extra_L
    if model.is_fpl:
        mu_q = 0.0
        rhs = fL1 * (1.0 + c * mu_l) + c * src
        tensor = model.limit_tensor()
        def apply(x):
            return (1.0 + c * mu_l) * x - c * nH * q0_fpl(x, model.kernel_LH, grid, tensor)

        fL1_next = pn.cg_solve(apply, rhs, cfg.cg_rtol, cfg.cg_maxiter, x0=fL1)
        # constants span the kernel of q_0, so the mass of fL1^+ is known exactly
        ones = np.ones(grid.shape)
        fL1_next = pn.restore_component(fL1_next, rhs / (1.0 + c * mu_l), ones)
    else:
        # Q_0^LH(fL1^+, fH0^+) ~ n_H [q0(fL1) + mu' fL1 - mu' fL1^+]
        mu_q = _mu_q0(config)
        a = 1.0 + c * (mu_l + nH * mu_q)
        fL1_next = fL1 + c * (src + nH * model.q0(fL1)) / a

    # heavy correction
    c = dt / eps
    mu_h = _mu_like(fH0, model.kernel_HH, config, config.mu_H)
    src = (model.q_HL(fH0_next, fL0_next, eps) - model.q0_HL(fH0_next, fL0_next)) / eps
    src += _polarised(model.q_HH, fH0, fH1)
    src += eps * model.q_HH(fH1)
    src += model.q_HL(fH0_next, fL1_next, eps)
    src += model.q_HL(fH1, fL0, eps)
    src += eps * model.q_HL(fH1, fL1, eps)
    if extra_H is not None:
        src += extra_H
    fH1_next = fH1 + c * src / (1.0 + c * mu_h)

    if info is not None:
        info.mu_L, info.mu_H, info.mu_q0 = mu_l, mu_h, mu_q
    return fL1_next, fH1_next


# ---------------------------------------------------------------- full step

def ap_step(state, config, info=None):
    """Advance the split state by one step of size ``config.dt``."""
    dt = config.dt
    momL0 = update_moments_L0(state, dt, config)
    momH0 = update_moments_H0(state, dt, config)
    fL0, fH0 = step_f0(state, dt, config, momL0, momH0, info)
    fL1, fH1 = step_f1(state, dt, config, fL0, fH0, info)
    if info is not None:
        info.neg_nodes_L0 = negative_nodes(fL0)
        info.neg_nodes_H0 = negative_nodes(fH0)
    return replace(state, fL0=fL0, fL1=fL1, fH0=fH0, fH1=fH1, momL0=momL0, momH0=momH0,
                   t=state.t + dt)


def reconstruct(state, eps=None):
    """(f^L, f^H) = f_0 + eps f_1; ``eps=0`` returns the f_0 fields."""
    e = state.eps if eps is None else eps
    return state.fL0 + e * state.fL1, state.fH0 + e * state.fH1


def negative_nodes(f):
    """Number of nodes with a negative value (no clipping is ever applied)."""
    return int(np.count_nonzero(f < 0))
