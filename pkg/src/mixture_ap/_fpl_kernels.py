"""Compiled pair sums for the Landau (FPL) operators.

No interpolation is involved: the kernel B(w) S(w) is evaluated at the
exact relative velocity w = v^L - eps v^H of every node pair.
"""

import numba as nb
import numpy as np

nb.config.THREADING_LAYER = "workqueue"


@nb.njit(parallel=True, cache=True, fastmath=True)
def pair_flux(gl, fl, gh, fh, eps, out_light, v_max, dv, gamma, delta):
    """Flux of the light-heavy Landau operator.

    For every pair, with w = v^L - eps v^H,

        J(v^L, v^H) = B(w) S(w) (grad f^L f^H - eps grad f^H f^L).

    ``out_light``: returns sum_H J dv (flux in v^L); otherwise returns
    -sum_L J dv (flux in v^H).  gl, gh are the (3, N, N, N) gradients.
    """
    n = fl.shape[0]
    out = np.zeros((3, n, n, n))
    vol = dv ** 3
    d2 = delta * delta
    expo = 0.5 * (gamma + 2.0)
    sign = 1.0 if out_light else -1.0
    for p in nb.prange(n * n * n):
        px = p // (n * n)
        py = (p // n) % n
        pz = p % n
        ax = 0.0
        ay = 0.0
        az = 0.0
        for q in range(n * n * n):
            qx = q // (n * n)
            qy = (q // n) % n
            qz = q % n
            if out_light:
                ix, iy, iz, jx, jy, jz = px, py, pz, qx, qy, qz
            else:
                ix, iy, iz, jx, jy, jz = qx, qy, qz, px, py, pz
            wx = (ix + 0.5) * dv - v_max - eps * ((jx + 0.5) * dv - v_max)
            wy = (iy + 0.5) * dv - v_max - eps * ((jy + 0.5) * dv - v_max)
            wz = (iz + 0.5) * dv - v_max - eps * ((jz + 0.5) * dv - v_max)
            r2 = wx * wx + wy * wy + wz * wz + d2
            b = 0.5 * r2 ** expo
            a = fh[jx, jy, jz]
            c = eps * fl[ix, iy, iz]
            # bracket = grad f^L f^H - eps grad f^H f^L
            bx = gl[0, ix, iy, iz] * a - c * gh[0, jx, jy, jz]
            by = gl[1, ix, iy, iz] * a - c * gh[1, jx, jy, jz]
            bz = gl[2, ix, iy, iz] * a - c * gh[2, jx, jy, jz]
            proj = (wx * bx + wy * by + wz * bz) / r2
            ax += b * (bx - proj * wx)
            ay += b * (by - proj * wy)
            az += b * (bz - proj * wz)
        out[0, px, py, pz] = sign * ax * vol
        out[1, px, py, pz] = sign * ay * vol
        out[2, px, py, pz] = sign * az * vol
    return out


@nb.njit(parallel=True, cache=True, fastmath=True)
def diffusion_matrix(g, v_max, dv, gamma, delta):
    """D(g)(v) = sum_* B(v - v_*) S(v - v_*) g_* dv^3 as (6, N, N, N): xx yy zz xy xz yz."""
    n = g.shape[0]
    out = np.zeros((6, n, n, n))
    vol = dv ** 3
    d2 = delta * delta
    expo = 0.5 * (gamma + 2.0)
    for p in nb.prange(n * n * n):
        ix = p // (n * n)
        iy = (p // n) % n
        iz = p % n
        acc = np.zeros(6)
        for q in range(n * n * n):
            jx = q // (n * n)
            jy = (q // n) % n
            jz = q % n
            wx = (ix - jx) * dv
            wy = (iy - jy) * dv
            wz = (iz - jz) * dv
            r2 = wx * wx + wy * wy + wz * wz + d2
            b = 0.5 * r2 ** expo * g[jx, jy, jz]
            acc[0] += b * (1.0 - wx * wx / r2)
            acc[1] += b * (1.0 - wy * wy / r2)
            acc[2] += b * (1.0 - wz * wz / r2)
            acc[3] -= b * wx * wy / r2
            acc[4] -= b * wx * wz / r2
            acc[5] -= b * wy * wz / r2
        for c in range(6):
            out[c, ix, iy, iz] = acc[c] * vol
    return out
