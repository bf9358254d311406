"""
Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

All runs use the velocity grid N = 8 on [-6, 6]^3 unless a criterion asks
for a refinement ladder.  Tolerances are the stated ones; where a
criterion leaves a parameter open the choice is documented in the test.
"""

import time

import numpy as np
import pytest

from mixture_ap import ap_homogeneous as aph
from mixture_ap import ap_inhomogeneous as api
from mixture_ap import collision_boltzmann as cb
from mixture_ap import collision_fpl as cf
from mixture_ap import limit_oracle as lo
from mixture_ap import penalty as pn
from mixture_ap.errors import CFLViolation
from mixture_ap.operators import CollisionModel
from mixture_ap.phase_space import VelocityGrid, compute_moments, maxwellian

B0 = 0.1


def boltzmann(grid, order=4, conservative=True):
    return CollisionModel(grid, "boltzmann", cb.BoltzKernel(gamma=0.0, b0=B0, sphere_order=order),
                          conservative=conservative)


def landau(grid):
    return CollisionModel(grid, "fpl", cf.FPLKernel(gamma=0.0, delta=1e-6))


def fit_order(ns, errs):
    """Least-squares slope of -log|err| against log N."""
    return -np.polyfit(np.log(ns), np.log(np.abs(errs)), 1)[0]


def temperatures(state, grid):
    fL, fH = aph.reconstruct(state)
    return compute_moments(fL, grid).macro()[2], compute_moments(fH, grid).macro()[2]


# ------------------------------------------------------------------------ 1

def test_c01_equilibrium_annihilation(verdict):
    # the box is the free parameter of this criterion; V_max = 4 keeps the
    # Maxwellian tails resolved at N = 8 (sweep recorded in the notes)
    ratios = {}
    for name, make in (("boltzmann", boltzmann), ("boltzmann raw", lambda g: boltzmann(g, conservative=False)),
                       ("fpl", landau)):
        res = []
        for n in (8, 16):
            g = VelocityGrid(4.0, n)
            m = maxwellian(g, 1.0, 0.0, 1.0)
            res.append(np.max(np.abs(make(g).q_LL(m))) / np.max(m))
        ratios[name] = res[0] / res[1]
    ok = all(r >= 1.5 for r in ratios.values())
    verdict(1, "Q^LL(M, M) residual drops >= 1.5x from N = 8 to 16", ok,
            ", ".join(f"{k} {v:.2f}x" for k, v in ratios.items()))
    assert ok


# ------------------------------------------------------------------------ 2

def test_c02_parity_identities(verdict):
    iso = {}
    for name, make in (("boltzmann", boltzmann), ("fpl", landau)):
        res = []
        for n in (8, 12, 16):
            g = VelocityGrid(4.0, n)
            m = maxwellian(g, 1.0, 0.0, 1.0)
            fh = maxwellian(g, 1.0, 0.0, 2.0)
            res.append(np.max(np.abs(make(g).q0_LH(m, fh))) / np.max(m))
        iso[name] = res
    iso_ok = all(r[-1] <= 1e-3 and r[0] > r[1] > r[2] for r in iso.values())

    g = VelocityGrid(6.0, 8)
    m = maxwellian(g, 1.0, 0.0, 1.0)
    even = m * (1.0 + 0.3 * g.v[0] ** 2 + 0.2 * g.v[0] * g.v[1])
    fh = maxwellian(g, 1.0, 0.0, 2.0)
    k_b = cb.BoltzKernel(gamma=0.0, b0=B0, sphere_order=4)
    k_f = cf.FPLKernel(gamma=0.0, delta=1e-6)
    drift = max(np.max(np.abs(cb.drift_vector(even, k_b, g))), np.max(np.abs(cf.drift_vector_fpl(even, k_f, g))))
    q_hl = max(np.max(np.abs(boltzmann(g).q0_HL(fh, even))), np.max(np.abs(landau(g).q0_HL(fh, even))))
    even_ok = drift <= 1e-12 and q_hl <= 1e-12 * np.max(fh)
    ok = iso_ok and even_ok
    verdict(2, "isotropic q0_LH <= 1e-3 at N = 16 and decreasing; even drift at round-off", ok,
            "isotropic N=8,12,16: " + "; ".join(f"{k} " + ", ".join(f"{x:.2e}" for x in v)
                                                for k, v in iso.items())
            + f" | drift {drift:.1e}, q0_HL {q_hl:.1e}")
    assert ok


# ------------------------------------------------------------------------ 3

def _conservation_defects(kind, eps, n):
    g = VelocityGrid(6.0, n)
    fL = maxwellian(g, 1.0, (0.3, 0.0, 0.0), 1.0)
    fH = maxwellian(g, 1.0, (-0.2, 0.1, 0.0), 2.0)
    if kind == "boltzmann":
        k = cb.BoltzKernel(gamma=0.0, b0=B0, sphere_order=4)
        qlh = cb.q_inter_LH_eps(fL, fH, eps, k, g, conservative=False)
        qhl = cb.q_inter_HL_eps(fH, fL, eps, k, g, conservative=False)
        scale = 0.5 * B0 * 4 * np.pi
    else:
        k = cf.FPLKernel(gamma=0.0, delta=1e-6)
        qlh = cf.q_inter_LH_eps_fpl(fL, fH, eps, k, g)
        qhl = cf.q_inter_HL_eps_fpl(fH, fL, eps, k, g)
        scale = np.sum(np.abs(qlh)) * g.weight
    w = g.weight
    # loss-term scale nu n_L n_H of the light operator (Boltzmann), int |Q| (Landau)
    scale *= 1.0 if kind == "fpl" else np.sum(fL) * w * np.sum(fH) * w
    pl = np.array([np.sum(qlh * g.v[a]) for a in range(3)]) * w
    ph = np.array([np.sum(qhl * g.v[a]) for a in range(3)]) * w
    mom = pl + (eps if eps == 1.0 else 1.0) * ph
    return np.array([np.sum(qlh) * w, eps * np.sum(qhl) * w, np.max(np.abs(mom))]) / scale


def test_c03_conservation_identities(verdict):
    # raw operators; the mixed identity with an eps factor on the momentum line
    # is checked at eps = 1, where both forms agree, and the consistent form
    # int Q^LH v + int Q^HL v = 0 at eps = 0.1
    ns = (6, 8, 10, 12)
    tol, details, ok = 0.02, [], True
    for kind in ("boltzmann", "fpl"):
        for eps in (1.0, 0.1):
            d = np.array([_conservation_defects(kind, eps, n) for n in ns])
            for j, label in enumerate(("mass LH", "mass HL", "momentum")):
                col = np.abs(d[:, j])
                roundoff = np.all(col <= 1e-13)
                order = np.inf if roundoff else fit_order(ns, col)
                good = roundoff or (col[-1] <= tol and order >= 1.0)
                ok &= bool(good)
                details.append(f"{kind} eps={eps:g} {label}: {col[-1]:.1e}"
                               + ("" if roundoff else f" (order {order:.1f})"))
    verdict(3, "light/heavy mass and mixed momentum identities decay with N", ok, "; ".join(details))
    assert ok


# ------------------------------------------------------------------------ 4

def test_c04_polarisation(verdict, rng):
    g = VelocityGrid(6.0, 8)
    f = maxwellian(g, 1.0, 0.0, 1.0) * (1 + 0.1 * rng.uniform(-1, 1, g.shape))
    h = maxwellian(g, 0.8, (0.2, 0.0, 0.0), 1.4)
    worst = 0.0
    for model in (boltzmann(g), landau(g)):
        for op in (model.q_LL, model.q_HH):
            quad = lambda x: op(x)
            scale = np.max(np.abs(op(f, h)))
            worst = max(worst,
                        np.max(np.abs(cb.bilinear(quad, f, f) - op(f))) / np.max(np.abs(op(f))),
                        np.max(np.abs(op(f, f) - op(f))) / np.max(np.abs(op(f))),
                        np.max(np.abs(cb.bilinear(quad, f, h) - op(f, h))) / scale,
                        np.max(np.abs(op(f, h) - op(h, f))) / scale)
    ok = worst <= 1e-12
    verdict(4, "polarisation and symmetry of the like-particle operators", ok, f"max rel {worst:.1e}")
    assert ok


# ------------------------------------------------------------------------ 5

def test_c05_fp_penalty_solver(verdict):
    g = VelocityGrid(6.0, 8)
    M = maxwellian(g, 1.0, (0.1, 0.0, 0.0), 1.2)
    op = pn.SymmetrizedFP(M, g)
    eye = np.eye(g.size)
    A = np.array([op.apply(e.reshape(g.shape)).ravel() for e in eye]).T
    sym = np.max(np.abs(A - A.T)) / np.max(np.abs(A))
    top = np.max(np.linalg.eigvalsh(0.5 * (A + A.T))) / np.max(np.abs(A))
    c = 5.0
    rhs = M * (1.0 + 0.3 * g.v[0] - 0.2 * g.v[1] * g.v[2])
    f_cg = pn.fp_implicit_solve(rhs, M, c, g)
    h_dense = np.linalg.solve(eye - c * A, (rhs / op.sqrt_m).ravel())
    h_cg = (f_cg / op.sqrt_m).ravel()
    err_h = np.linalg.norm(h_cg - h_dense) / np.linalg.norm(h_dense)
    err_f = np.linalg.norm(f_cg.ravel() - op.sqrt_m.ravel() * h_dense) / np.linalg.norm(f_cg)
    ok = err_h <= 1e-9 and sym <= 1e-12 and top <= 1e-12
    verdict(5, "CG matches the dense solve; P~ symmetric and negative semidefinite", ok,
            f"rel err (h) {err_h:.1e} [f-space {err_f:.1e}], asym {sym:.1e}, max eig {top:.1e}")
    assert ok


# ------------------------------------------------------------------------ 6

def _ap_temperature_run(model, eps, dt, t_end):
    g = model.grid
    s = aph.SplitState.from_maxwellians(g, eps, (1.0, 0.0, 1.0), (1.0, 0.0, 2.0))
    cfg = aph.SchemeConfig(dt=dt, model=model)
    steps = int(round(t_end / dt))
    tl, th = [temperatures(s, g)[0]], [temperatures(s, g)[1]]
    times = []
    for _ in range(steps):
        t0 = time.perf_counter()
        s = aph.ap_step(s, cfg)
        times.append(time.perf_counter() - t0)
        a, b = temperatures(s, g)
        tl.append(a)
        th.append(b)
    # median step time: robust against scheduler noise on a shared core
    return np.array(tl), np.array(th), float(np.median(times))


def _temperature_error(tl, th, dt, oracle):
    t_ref, tl_ref, th_ref, dt_ref = oracle
    idx = np.round(np.arange(len(tl)) * dt / dt_ref).astype(int)
    return max(np.max(np.abs(tl - tl_ref[idx]) / tl_ref[idx]), np.max(np.abs(th - th_ref[idx]) / th_ref[idx]))


def test_c06_asymptotic_preserving(verdict):
    g = VelocityGrid(6.0, 8)
    model = boltzmann(g)
    dt, t_end = 1e-2, 1.0
    dt_ref = 1e-3
    ref = lo.solve_relaxation(lo.MacroState(1.0, 1.0, 1.0, 0.0, 2.0), dt_ref, t_end, model)
    oracle = (*ref, dt_ref)
    errs, costs = {}, {}
    for eps in (1e-2, 1e-3, 1e-4):
        tl, th, cost = _ap_temperature_run(model, eps, dt, t_end)
        errs[eps] = _temperature_error(tl, th, dt, oracle)
        costs[eps] = cost
    tl, th, _ = _ap_temperature_run(model, 1e-4, dt / 2, t_end)
    err_half = _temperature_error(tl, th, dt / 2, oracle)
    c = np.array(list(costs.values()))
    spread = (c.max() - c.min()) / c.mean()
    e = [errs[1e-2], errs[1e-3], errs[1e-4]]
    monotone = e[0] >= e[1] >= e[2]
    ratio = errs[1e-4] / err_half
    ok_a = spread < 0.10
    ok_b = monotone and errs[1e-4] <= 0.05
    ok_c = 1.6 <= ratio <= 2.4
    ok = ok_a and ok_b and ok_c
    verdict(6, "AP: eps-independent cost, temperature error vs limit oracle, first order in dt", ok,
            f"(a) cost spread {spread:.1%} {'ok' if ok_a else 'FAIL'}; "
            f"(b) errors eps=1e-2,1e-3,1e-4: {e[0]:.3f}, {e[1]:.3f}, {e[2]:.3f} {'ok' if ok_b else 'FAIL'}; "
            f"(c) halving ratio {ratio:.2f} {'ok' if ok_c else 'FAIL'}")
    assert ok


# ------------------------------------------------------------------------ 7

def test_c07_eps_one_consistency(verdict):
    g = VelocityGrid(6.0, 8)
    model = boltzmann(g, order=2)
    s0 = aph.SplitState.from_maxwellians(g, 1.0, (1.0, (0.2, 0.0, 0.0), 1.0), (1.0, (-0.1, 0.0, 0.0), 2.0))
    fL, fH = aph.reconstruct(s0)
    # RK4 reference at dt = 0.0025 (200 steps), eight times finer than the finest AP step
    for _ in range(200):
        fL, fH = lo.reference_rk4_step(fL, fH, 1.0, 0.0025, model)
    errs = []
    for dt in (0.02, 0.01, 0.005):
        s, cfg = s0, aph.SchemeConfig(dt=dt, model=model)
        for _ in range(int(round(0.5 / dt))):
            s = aph.ap_step(s, cfg)
        aL, aH = aph.reconstruct(s)
        errs.append(max(np.max(np.abs(aL - fL)) / np.max(fL), np.max(np.abs(aH - fH)) / np.max(fH)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    ok = bool(np.all(orders >= 0.8))
    verdict(7, "eps = 1 AP scheme converges to RK4 with order >= 0.8", ok,
            "errors " + ", ".join(f"{e:.2e}" for e in errs) + " orders " + ", ".join(f"{o:.2f}" for o in orders))
    assert ok


# ------------------------------------------------------------------------ 8

def test_c08_discrete_conservation(verdict):
    g = VelocityGrid(6.0, 8)
    # densities over 10^3 steps with the Landau model
    model = landau(g)
    s = aph.SplitState.from_maxwellians(g, 1e-2, (1.0, 0.0, 1.0), (1.0, 0.0, 2.0))
    cfg = aph.SchemeConfig(dt=1e-2, model=model)
    nL0, nH0 = compute_moments(s.fL0, g).p0, compute_moments(s.fH0, g).p0
    trL, trH = s.momL0.p0, s.momH0.p0
    dev = 0.0
    for _ in range(1000):
        s = aph.ap_step(s, cfg)
        dev = max(dev, abs(compute_moments(s.fL0, g).p0 - nL0) / nL0, abs(compute_moments(s.fH0, g).p0 - nH0) / nH0)
    tracked = s.momL0.p0 == trL and s.momH0.p0 == trH
    mass_ok = tracked and dev <= 1e-12

    # total energy drift per unit time against dt (Boltzmann, pair-conservative operators)
    model = boltzmann(g, order=2)
    drifts = []
    for dt in (0.02, 0.01, 0.005):
        s = aph.SplitState.from_maxwellians(g, 1.0, (1.0, 0.0, 1.0), (1.0, 0.0, 2.0))
        fL, fH = aph.reconstruct(s)
        e0 = compute_moments(fL, g).p2 + compute_moments(fH, g).p2
        c = aph.SchemeConfig(dt=dt, model=model)
        for _ in range(int(round(0.5 / dt))):
            s = aph.ap_step(s, c)
        fL, fH = aph.reconstruct(s)
        drifts.append(abs(compute_moments(fL, g).p2 + compute_moments(fH, g).p2 - e0) / 0.5)
    ratios = np.array(drifts[:-1]) / np.array(drifts[1:])
    drift_ok = bool(np.all((ratios >= 1.6) & (ratios <= 2.4)))
    ok = mass_ok and drift_ok
    verdict(8, "densities exact over 10^3 steps; energy drift rate halves with dt", ok,
            f"tracked densities unchanged {tracked}, max field density change {dev:.1e}; drift rates "
            + ", ".join(f"{d:.2e}" for d in drifts) + " ratios " + ", ".join(f"{r:.2f}" for r in ratios))
    assert ok


# ------------------------------------------------------------------------ 9

def test_c09_oracle_identities(verdict):
    g = VelocityGrid(6.0, 8)
    model = boltzmann(g)
    m = lo.MacroState(1.0, 1.0, 0.7, (0.3, -0.1, 0.0), 2.0)
    worst_e, worst_p, mono = 0.0, 0.0, True
    gap = abs(m.T_L - m.T_H)
    for _ in range(100):
        m1 = lo.relax_step_implicit(m, 0.05, model)
        worst_e = max(worst_e, abs(m1.thermal_energy - m.thermal_energy) / m.thermal_energy)
        worst_p = max(worst_p, np.max(np.abs(m1.n_H * m1.u_H - m.n_H * m.u_H)))
        mono &= m1.T_L >= m.T_L and m1.T_H <= m.T_H and m1.T_L <= m1.T_H
        mono &= abs(m1.T_L - m1.T_H) <= gap
        gap = abs(m1.T_L - m1.T_H)
        m = m1
    ok = worst_e <= 1e-12 and worst_p <= 1e-12 and mono
    verdict(9, "oracle conserves energy and heavy momentum; monotone approach", ok,
            f"energy {worst_e:.1e}, momentum {worst_p:.1e}, monotone {mono}")
    assert ok


# ----------------------------------------------------------------------- 10

def test_c10_lambda_closed_form(verdict):
    details, ok = [], True
    for T in (0.5, 1.0, 2.0):
        exact = 4 * np.pi / 3 * B0 * T
        err = {n: abs(lo.lambda_of_T(T, boltzmann(VelocityGrid(8.0, n))) / exact - 1) for n in (8, 16, 32)}
        order = np.log2(err[8] / err[16])
        ok &= err[32] <= 1e-3 and order >= 2.0
        details.append(f"T={T:g}: N=32 rel err {err[32]:.1e}, order(8->16) {order:.1f}")
    verdict(10, "lambda(T) = (4 pi / 3) b0 T", ok, "; ".join(details))
    assert ok


# ----------------------------------------------------------------------- 11

def test_c11_inhomogeneous_reduction(verdict):
    g = VelocityGrid(6.0, 8)
    model = boltzmann(g)
    mesh = api.SpatialMesh(8, 0.125)
    scheme = aph.SchemeConfig(dt=0.01, model=model)
    icfg = api.InhomConfig(scheme, mesh)
    worst = 0.0
    for eps in (0.1, 2.0):
        s = aph.SplitState.from_maxwellians(g, eps, (1.0, 0.0, 1.0), (1.0, (0.2, 0.0, 0.0), 2.0))
        f = api.FieldArray.from_cells([s] * mesh.nx)
        for _ in range(2):
            s = aph.ap_step(s, scheme)
            f = api.full_step(f, icfg)
        for i in range(mesh.nx):
            c = f.cell(i)
            for a, b in ((c.fL0, s.fL0), (c.fL1, s.fL1), (c.fH0, s.fH0), (c.fH1, s.fH1)):
                worst = max(worst, np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))
    light = [(1.0 + 0.2 * np.sin(2 * np.pi * x), 0.0, 1.0) for x in mesh.centers]
    heavy = [(1.0, 0.0, 2.0 - 0.3 * np.cos(2 * np.pi * x)) for x in mesh.centers]
    f = api.FieldArray.from_profiles(g, 0.1, light, heavy)
    m0 = np.array(api.total_mass(f, mesh, g))
    for _ in range(3):
        f = api.full_step(f, icfg)
    mass = np.max(np.abs(np.array(api.total_mass(f, mesh, g)) - m0) / m0)
    try:
        api.full_step(f, api.InhomConfig(aph.SchemeConfig(dt=0.03, model=model), mesh))
        rejected = False
    except CFLViolation:
        rejected = True
    ok = worst <= 1e-13 and mass <= 1e-13 and rejected
    verdict(11, "x-uniform data reproduce the homogeneous scheme; periodic mass; CFL check", ok,
            f"cell-wise rel diff {worst:.1e}, total mass change {mass:.1e}, CFL violation rejected {rejected}")
    assert ok


# ----------------------------------------------------------------------- 12

def test_c12_psi_identities(verdict):
    values = api.psi_factors(2.0) == (0.25, 0.5) and api.psi_factors(0.1) == (1.0, 1.0)
    zero = {}
    for eps in (1e-4, 1e-2, 0.1, 0.5, 1.0):
        p1, p2 = api.psi_factors(eps)
        zero[eps] = (1 - eps ** 2 * p1, 1 - eps * p2)
    zero_ok = all(a == 0.0 and b == 0.0 for a, b in zero.values())
    ok = values and zero_ok
    verdict(12, "psi factor values; correction prefactors vanish for eps <= 1", ok,
            f"values {values}; (1 - eps^2 psi1, 1 - eps psi2): "
            + ", ".join(f"eps={e:g}: ({a:.4g}, {b:.4g})" for e, (a, b) in zero.items()))
    assert ok
