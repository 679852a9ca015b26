# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled versions of the hot kernels (see _fallback.py for the reference
implementations and documentation)."""
import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, sqrt

cnp.import_array()


def cotan_weights(V, F):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Va = np.ascontiguousarray(V, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] Fa = np.ascontiguousarray(F, dtype=np.int64)
    cdef Py_ssize_t m = Fa.shape[0]
    cdef Py_ssize_t nv = Va.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] rows = np.empty(3 * m, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cols = np.empty(3 * m, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w = np.empty(3 * m, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] area = np.zeros(nv, dtype=np.float64)

    cdef Py_ssize_t t, k
    cdef long i0, i1, i2
    cdef double e0x, e0y, e0z, e1x, e1y, e1z, e2x, e2y, e2z
    cdef double nx, ny, nz, dbl, tri_area
    cdef double cot0, cot1, cot2, l0sq, l1sq, l2sq
    cdef double a0, a1, a2
    cdef bint obt0, obt1, obt2

    for t in range(m):
        i0 = Fa[t, 0]
        i1 = Fa[t, 1]
        i2 = Fa[t, 2]
        # edge vectors opposite each corner
        e0x = Va[i2, 0] - Va[i1, 0]
        e0y = Va[i2, 1] - Va[i1, 1]
        e0z = Va[i2, 2] - Va[i1, 2]
        e1x = Va[i0, 0] - Va[i2, 0]
        e1y = Va[i0, 1] - Va[i2, 1]
        e1z = Va[i0, 2] - Va[i2, 2]
        e2x = Va[i1, 0] - Va[i0, 0]
        e2y = Va[i1, 1] - Va[i0, 1]
        e2z = Va[i1, 2] - Va[i0, 2]
        nx = e2y * (-e1z) - e2z * (-e1y)
        ny = e2z * (-e1x) - e2x * (-e1z)
        nz = e2x * (-e1y) - e2y * (-e1x)
        dbl = sqrt(nx * nx + ny * ny + nz * nz)
        if dbl < 1e-300:
            dbl = 1e-300
        cot0 = (-(e1x * e2x + e1y * e2y + e1z * e2z)) / dbl
        cot1 = (-(e2x * e0x + e2y * e0y + e2z * e0z)) / dbl
        cot2 = (-(e0x * e1x + e0y * e1y + e0z * e1z)) / dbl
        rows[3 * t] = i1
        cols[3 * t] = i2
        w[3 * t] = 0.5 * cot0
        rows[3 * t + 1] = i2
        cols[3 * t + 1] = i0
        w[3 * t + 1] = 0.5 * cot1
        rows[3 * t + 2] = i0
        cols[3 * t + 2] = i1
        w[3 * t + 2] = 0.5 * cot2
        tri_area = 0.5 * dbl
        l0sq = e0x * e0x + e0y * e0y + e0z * e0z
        l1sq = e1x * e1x + e1y * e1y + e1z * e1z
        l2sq = e2x * e2x + e2y * e2y + e2z * e2z
        obt0 = cot0 < 0.0
        obt1 = cot1 < 0.0
        obt2 = cot2 < 0.0
        if obt0 or obt1 or obt2:
            a0 = tri_area / 2.0 if obt0 else tri_area / 4.0
            a1 = tri_area / 2.0 if obt1 else tri_area / 4.0
            a2 = tri_area / 2.0 if obt2 else tri_area / 4.0
        else:
            a0 = (l2sq * cot2 + l1sq * cot1) / 8.0
            a1 = (l0sq * cot0 + l2sq * cot2) / 8.0
            a2 = (l1sq * cot1 + l0sq * cot0) / 8.0
        area[i0] += a0
        area[i1] += a1
        area[i2] += a2
    return rows, cols, w, area


def levelset_speed(u, double h, double kappa_max):
    cdef cnp.ndarray[cnp.float64_t, ndim=3] ua = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t nx = ua.shape[0]
    cdef Py_ssize_t ny = ua.shape[1]
    cdef Py_ssize_t nz = ua.shape[2]
    cdef cnp.ndarray[cnp.float64_t, ndim=3] out = np.zeros((nx, ny, nz), dtype=np.float64)
    cdef Py_ssize_t i, j, k
    cdef double ux, uy, uz, uxx, uyy, uzz, uxy, uxz, uyz
    cdef double g2, num, kg, gmag, kappa, c
    cdef double inv2h = 1.0 / (2.0 * h)
    cdef double invh2 = 1.0 / (h * h)
    cdef double inv4h2 = 1.0 / (4.0 * h * h)
    cdef double eps = 1e-12

    for i in range(1, nx - 1):
        for j in range(1, ny - 1):
            for k in range(1, nz - 1):
                c = ua[i, j, k]
                ux = (ua[i + 1, j, k] - ua[i - 1, j, k]) * inv2h
                uy = (ua[i, j + 1, k] - ua[i, j - 1, k]) * inv2h
                uz = (ua[i, j, k + 1] - ua[i, j, k - 1]) * inv2h
                uxx = (ua[i + 1, j, k] - 2.0 * c + ua[i - 1, j, k]) * invh2
                uyy = (ua[i, j + 1, k] - 2.0 * c + ua[i, j - 1, k]) * invh2
                uzz = (ua[i, j, k + 1] - 2.0 * c + ua[i, j, k - 1]) * invh2
                uxy = (ua[i + 1, j + 1, k] - ua[i + 1, j - 1, k] - ua[i - 1, j + 1, k] + ua[i - 1, j - 1, k]) * inv4h2
                uxz = (ua[i + 1, j, k + 1] - ua[i + 1, j, k - 1] - ua[i - 1, j, k + 1] + ua[i - 1, j, k - 1]) * inv4h2
                uyz = (ua[i, j + 1, k + 1] - ua[i, j + 1, k - 1] - ua[i, j - 1, k + 1] + ua[i, j - 1, k - 1]) * inv4h2
                g2 = ux * ux + uy * uy + uz * uz
                num = (
                    (uyy + uzz) * ux * ux
                    + (uxx + uzz) * uy * uy
                    + (uxx + uyy) * uz * uz
                    - 2.0 * (ux * uy * uxy + ux * uz * uxz + uy * uz * uyz)
                )
                kg = num / (g2 + eps)
                gmag = sqrt(g2)
                kappa = kg / (gmag if gmag > eps else eps)
                if kappa > kappa_max:
                    kappa = kappa_max
                elif kappa < -kappa_max:
                    kappa = -kappa_max
                out[i, j, k] = kappa * gmag
    return out


def reinit_step(u, sgn, double h, double dt):
    cdef cnp.ndarray[cnp.float64_t, ndim=3] ua = np.ascontiguousarray(u, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=3] sa = np.ascontiguousarray(sgn, dtype=np.float64)
    cdef Py_ssize_t nx = ua.shape[0]
    cdef Py_ssize_t ny = ua.shape[1]
    cdef Py_ssize_t nz = ua.shape[2]
    cdef cnp.ndarray[cnp.float64_t, ndim=3] out = ua.copy()
    cdef Py_ssize_t i, j, k
    cdef double c, s, dxm, dxp, dym, dyp, dzm, dzp, g
    cdef double a, b
    cdef double invh = 1.0 / h

    for i in range(1, nx - 1):
        for j in range(1, ny - 1):
            for k in range(1, nz - 1):
                c = ua[i, j, k]
                s = sa[i, j, k]
                dxm = (c - ua[i - 1, j, k]) * invh
                dxp = (ua[i + 1, j, k] - c) * invh
                dym = (c - ua[i, j - 1, k]) * invh
                dyp = (ua[i, j + 1, k] - c) * invh
                dzm = (c - ua[i, j, k - 1]) * invh
                dzp = (ua[i, j, k + 1] - c) * invh
                if s > 0.0:
                    a = dxm if dxm > 0.0 else 0.0
                    b = dxp if dxp < 0.0 else 0.0
                    g = a * a + b * b
                    a = dym if dym > 0.0 else 0.0
                    b = dyp if dyp < 0.0 else 0.0
                    g += a * a + b * b
                    a = dzm if dzm > 0.0 else 0.0
                    b = dzp if dzp < 0.0 else 0.0
                    g += a * a + b * b
                else:
                    a = dxm if dxm < 0.0 else 0.0
                    b = dxp if dxp > 0.0 else 0.0
                    g = a * a + b * b
                    a = dym if dym < 0.0 else 0.0
                    b = dyp if dyp > 0.0 else 0.0
                    g += a * a + b * b
                    a = dzm if dzm < 0.0 else 0.0
                    b = dzp if dzp > 0.0 else 0.0
                    g += a * a + b * b
                out[i, j, k] = c + dt * s * (1.0 - sqrt(g))
    return out
