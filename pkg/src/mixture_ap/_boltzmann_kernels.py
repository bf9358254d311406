"""Compiled quadrature loops for the Boltzmann operators.

Every loop is a pure map over output nodes; each output value is a sum
accumulated in a fixed order, so results do not depend on the number of
threads.  Fields are extended by zero outside the node range and points
outside the cube [-V_max, V_max]^3 contribute nothing, matching
``phase_space.interpolate``.
"""

import numba as nb
import numpy as np

# avoid probing for an outdated TBB; workqueue is always available
nb.config.THREADING_LAYER = "workqueue"


@nb.njit(inline="always", cache=True, fastmath=True)
def _trilinear(fp, n, sx, sy, sz):
    # fp is the field padded by one zero ghost layer; s* are continuous node
    # indices of the unpadded field, v = (s + 1/2) dv - V_max
    if sx < -0.5 or sx > n - 0.5 or sy < -0.5 or sy > n - 0.5 or sz < -0.5 or sz > n - 0.5:
        return 0.0
    # shift to padded indices; s + 1 > 0 so truncation is floor
    sx += 1.0
    sy += 1.0
    sz += 1.0
    bx = int(sx)
    by = int(sy)
    bz = int(sz)
    tx = sx - bx
    ty = sy - by
    tz = sz - bz
    ux = 1.0 - tx
    uy = 1.0 - ty
    uz = 1.0 - tz
    return (ux * (uy * (uz * fp[bx, by, bz] + tz * fp[bx, by, bz + 1])
                  + ty * (uz * fp[bx, by + 1, bz] + tz * fp[bx, by + 1, bz + 1]))
            + tx * (uy * (uz * fp[bx + 1, by, bz] + tz * fp[bx + 1, by, bz + 1])
                    + ty * (uz * fp[bx + 1, by + 1, bz] + tz * fp[bx + 1, by + 1, bz + 1])))


@nb.njit(inline="always", cache=True, fastmath=True)
def _near_node(fp, gd, hd, n, jx, jy, jz, dx, dy, dz):
    # f at node j displaced by d (units of dv); second-order Taylor
    # expansion within one cell of the node, trilinear farther out
    sx = jx + dx
    sy = jy + dy
    sz = jz + dz
    if abs(dx) > 1.0 or abs(dy) > 1.0 or abs(dz) > 1.0:
        return _trilinear(fp, n, sx, sy, sz)
    if sx < -0.5 or sx > n - 0.5 or sy < -0.5 or sy > n - 0.5 or sz < -0.5 or sz > n - 0.5:
        return 0.0
    lin = dx * gd[0, jx, jy, jz] + dy * gd[1, jx, jy, jz] + dz * gd[2, jx, jy, jz]
    quad = (dx * dx * hd[0, jx, jy, jz] + dy * dy * hd[1, jx, jy, jz] + dz * dz * hd[2, jx, jy, jz]
            + 2.0 * (dx * dy * hd[3, jx, jy, jz] + dx * dz * hd[4, jx, jy, jz] + dy * dz * hd[5, jx, jy, jz]))
    return fp[jx + 1, jy + 1, jz + 1] + lin + 0.5 * quad


@nb.njit(cache=True)
def _pad(f):
    n = f.shape[0]
    fp = np.zeros((n + 2, n + 2, n + 2))
    fp[1:-1, 1:-1, 1:-1] = f
    return fp


@nb.njit(inline="always", cache=True)
def _kernel_value(w2, gamma, b0, delta):
    if gamma == 0.0:
        return 0.5 * b0
    if gamma < 0.0:
        return 0.5 * b0 * (w2 + delta * delta) ** (0.5 * gamma)
    return 0.5 * b0 * w2 ** (0.5 * gamma)


@nb.njit(parallel=True, cache=True, fastmath=True)
def intra_gain(f, g, same, dv, dirs, wdir, gamma, b0, delta):
    """Symmetrised gain term of the like-particle operator.

    Omega-parametrisation: v' = v - (w.Omega)Omega, v'_* = v_* + (w.Omega)Omega
    with w = v - v_*.  ``dirs``/``wdir`` is the half sphere rule.
    """
    n = f.shape[0]
    nk = dirs.shape[0]
    fpad = _pad(f)
    gpad = _pad(g)
    out = np.zeros((n, n, n))
    vol = dv ** 3
    for p in nb.prange(n * n * n):
        ix = p // (n * n)
        iy = (p // n) % n
        iz = p % n
        acc = 0.0
        for jx in range(n):
            mx = ix - jx
            for jy in range(n):
                my = iy - jy
                for jz in range(n):
                    mz = iz - jz
                    # relative velocity in units of dv
                    w2 = (mx * mx + my * my + mz * mz) * dv * dv
                    bw = _kernel_value(w2, gamma, b0, delta) * vol
                    s = 0.0
                    for k in range(nk):
                        ox = dirs[k, 0]
                        oy = dirs[k, 1]
                        oz = dirs[k, 2]
                        c = mx * ox + my * oy + mz * oz
                        dx = c * ox
                        dy = c * oy
                        dz = c * oz
                        fa = _trilinear(fpad, n, ix - dx, iy - dy, iz - dz)
                        fb = _trilinear(fpad, n, jx + dx, jy + dy, jz + dz)
                        if same:
                            s += wdir[k] * fa * fb
                        else:
                            ga = _trilinear(gpad, n, ix - dx, iy - dy, iz - dz)
                            gb = _trilinear(gpad, n, jx + dx, jy + dy, jz + dz)
                            s += wdir[k] * 0.5 * (fa * gb + ga * fb)
                    acc += bw * s
        out[ix, iy, iz] = acc
    return out


@nb.njit(parallel=True, cache=True, fastmath=True)
def collision_frequency(g, dv, gamma, b0, delta, wsum):
    """nu(v) = int int B(v - v_*, Omega) g(v_*) dOmega dv_* (loss rate)."""
    n = g.shape[0]
    out = np.zeros((n, n, n))
    vol = dv ** 3
    for p in nb.prange(n * n * n):
        ix = p // (n * n)
        iy = (p // n) % n
        iz = p % n
        acc = 0.0
        for jx in range(n):
            mx = ix - jx
            for jy in range(n):
                my = iy - jy
                for jz in range(n):
                    mz = iz - jz
                    w2 = (mx * mx + my * my + mz * mz) * dv * dv
                    acc += _kernel_value(w2, gamma, b0, delta) * g[jx, jy, jz]
        out[ix, iy, iz] = acc * vol * wsum
    return out


@nb.njit(parallel=True, cache=True, fastmath=True)
def inter_operator(fl, fh, flr, gd, hd, eps, out_light, v_max, dv, dirs, wdir, wsum, gamma, b0, delta):
    """Gain minus loss of the light-heavy collision integral.

    Light velocity v^L, heavy scaled velocity v^H (physical heavy velocity
    eps * v^H).  With w = v^L - eps v^H and c = 2 (w.Omega) / (1 + eps^2):

        v'^L = v^L - c Omega,     v'^H = v^H + eps c Omega.

    ``out_light`` selects the output variable: integrate over v^H for the
    light operator, over v^L for the heavy one (no 1/eps factor here).

    For the heavy output the loss term is written after the change of
    variables v^L -> R v^L, R v = v - 2 (v.Omega) Omega:

        int B(w) f^L(v^L) dv^L = int B(R v^L - eps v^H) f^L(R v^L) dv^L,

    with ``flr[k]`` the light field sampled at R_k v^L.  At eps = 0 gain and
    loss then coincide node by node, so the discrete integral is O(eps).

    The heavy post-collision value sits eps c away from a node; within one
    cell it is taken from the second-order Taylor expansion with node
    derivatives ``gd`` (3 components) and ``hd`` (xx, yy, zz, xy, xz, yz),
    both in index units.  Unlike trilinear interpolation this expansion is
    smooth at the node, so it adds no O(eps) numerical diffusion.
    """
    n = fl.shape[0]
    nk = dirs.shape[0]
    flp = _pad(fl)
    fhp = _pad(fh)
    out = np.zeros((n, n, n))
    vol = dv ** 3
    red = 2.0 / (1.0 + eps * eps)
    for p in nb.prange(n * n * n):
        px = p // (n * n)
        py = (p // n) % n
        pz = p % n
        acc = 0.0
        for qx in range(n):
            for qy in range(n):
                for qz in range(n):
                    if out_light:
                        ix, iy, iz, jx, jy, jz = px, py, pz, qx, qy, qz
                    else:
                        ix, iy, iz, jx, jy, jz = qx, qy, qz, px, py, pz
                    vlx = (ix + 0.5) * dv - v_max
                    vly = (iy + 0.5) * dv - v_max
                    vlz = (iz + 0.5) * dv - v_max
                    vhx = (jx + 0.5) * dv - v_max
                    vhy = (jy + 0.5) * dv - v_max
                    vhz = (jz + 0.5) * dv - v_max
                    wx = vlx - eps * vhx
                    wy = vly - eps * vhy
                    wz = vlz - eps * vhz
                    bw = _kernel_value(wx * wx + wy * wy + wz * wz, gamma, b0, delta) * vol
                    s = 0.0
                    loss = 0.0
                    for k in range(nk):
                        ox = dirs[k, 0]
                        oy = dirs[k, 1]
                        oz = dirs[k, 2]
                        if not out_light:
                            cr = 2.0 * (vlx * ox + vly * oy + vlz * oz)
                            rx = vlx - cr * ox - eps * vhx
                            ry = vly - cr * oy - eps * vhy
                            rz = vlz - cr * oz - eps * vhz
                            loss += wdir[k] * _kernel_value(rx * rx + ry * ry + rz * rz, gamma, b0, delta) \
                                * flr[k, ix, iy, iz]
                        # displacement in units of dv
                        c = red * (wx * ox + wy * oy + wz * oz) / dv
                        a = _trilinear(flp, n, ix - c * ox, iy - c * oy, iz - c * oz)
                        if a == 0.0:
                            continue
                        b = _near_node(fhp, gd, hd, n, jx, jy, jz, eps * c * ox, eps * c * oy, eps * c * oz)
                        s += wdir[k] * a * b
                    if out_light:
                        acc += bw * (s - wsum * fl[ix, iy, iz] * fh[jx, jy, jz])
                    else:
                        acc += bw * s - vol * loss * fh[jx, jy, jz]
        out[px, py, pz] = acc
    return out


@nb.njit(parallel=True, cache=True, fastmath=True)
def inter_weak_moments(fl, fh, eps, v_max, dv, dirs, wdir, gamma, b0, delta):
    """Exact node-quadrature moments of the light-heavy collision integral.

    Uses the weak form int Q phi = int int int B f^L f^H (phi' - phi), which
    needs no interpolation.  Returns, per light node, the changes of
    (v^L, |v^L|^2, v^H, |v^H|^2) summed over heavy nodes and directions,
    shape (N, N, N, 8); the caller sums over nodes.
    """
    n = fl.shape[0]
    nk = dirs.shape[0]
    out = np.zeros((n, n, n, 8))
    vol2 = dv ** 6
    red = 2.0 / (1.0 + eps * eps)
    for p in nb.prange(n * n * n):
        ix = p // (n * n)
        iy = (p // n) % n
        iz = p % n
        a_l = fl[ix, iy, iz]
        if a_l == 0.0:
            continue
        vlx = (ix + 0.5) * dv - v_max
        vly = (iy + 0.5) * dv - v_max
        vlz = (iz + 0.5) * dv - v_max
        acc = np.zeros(8)
        for jx in range(n):
            for jy in range(n):
                for jz in range(n):
                    b_h = fh[jx, jy, jz]
                    if b_h == 0.0:
                        continue
                    vhx = (jx + 0.5) * dv - v_max
                    vhy = (jy + 0.5) * dv - v_max
                    vhz = (jz + 0.5) * dv - v_max
                    wx = vlx - eps * vhx
                    wy = vly - eps * vhy
                    wz = vlz - eps * vhz
                    bw = _kernel_value(wx * wx + wy * wy + wz * wz, gamma, b0, delta) * vol2 * a_l * b_h
                    for k in range(nk):
                        ox = dirs[k, 0]
                        oy = dirs[k, 1]
                        oz = dirs[k, 2]
                        c = red * (wx * ox + wy * oy + wz * oz)
                        g = bw * wdir[k]
                        # light: v' = v - c Omega, heavy: v' = v + eps c Omega
                        acc[0] -= g * c * ox
                        acc[1] -= g * c * oy
                        acc[2] -= g * c * oz
                        acc[3] += g * (c * c - 2.0 * c * (vlx * ox + vly * oy + vlz * oz))
                        ec = eps * c
                        acc[4] += g * ec * ox
                        acc[5] += g * ec * oy
                        acc[6] += g * ec * oz
                        acc[7] += g * (ec * ec + 2.0 * ec * (vhx * ox + vhy * oy + vhz * oz))
        for m in range(8):
            out[ix, iy, iz, m] = acc[m]
    return out
