"""Pure-numpy implementations of the hot kernels.

The compiled extension in `_core.pyx` mirrors these signatures exactly; the
package selects whichever is available at import time (see __init__).
"""
import numpy as np


def cotan_weights(V, F):
    """Cotangent edge weights and mixed Voronoi vertex areas.

    Returns (rows, cols, w, area):
      rows/cols/w  -- COO triplets of the symmetric weight matrix, one entry
                      per triangle half-edge (duplicates must be summed),
                      w = 0.5 * cot(opposite angle)
      area         -- per-vertex mixed area (Meyer et al.: Voronoi for
                      non-obtuse triangles, T/2 at the obtuse corner and T/4
                      elsewhere otherwise)
    """
    V = np.asarray(V, dtype=np.float64)
    F = np.asarray(F, dtype=np.int64)
    i0, i1, i2 = F[:, 0], F[:, 1], F[:, 2]
    p0, p1, p2 = V[i0], V[i1], V[i2]
    e0 = p2 - p1  # edge opposite vertex 0
    e1 = p0 - p2
    e2 = p1 - p0
    n = np.cross(e2, -e1)
    dbl_area = np.linalg.norm(n, axis=1)
    dbl_area = np.maximum(dbl_area, 1e-300)
    # cot(angle at corner k) = dot of adjacent edges / (2 * area)
    cot0 = np.einsum("ij,ij->i", -e1, e2) / dbl_area
    cot1 = np.einsum("ij,ij->i", -e2, e0) / dbl_area
    cot2 = np.einsum("ij,ij->i", -e0, e1) / dbl_area

    rows = np.concatenate([i1, i2, i0])
    cols = np.concatenate([i2, i0, i1])
    w = 0.5 * np.concatenate([cot0, cot1, cot2])

    # mixed areas
    tri_area = 0.5 * dbl_area
    l0sq = np.einsum("ij,ij->i", e0, e0)
    l1sq = np.einsum("ij,ij->i", e1, e1)
    l2sq = np.einsum("ij,ij->i", e2, e2)
    a0 = (l2sq * cot2 + l1sq * cot1) / 8.0
    a1 = (l0sq * cot0 + l2sq * cot2) / 8.0
    a2 = (l1sq * cot1 + l0sq * cot0) / 8.0
    obtuse0 = cot0 < 0.0
    obtuse1 = cot1 < 0.0
    obtuse2 = cot2 < 0.0
    any_obt = obtuse0 | obtuse1 | obtuse2
    a0 = np.where(any_obt, np.where(obtuse0, tri_area / 2.0, tri_area / 4.0), a0)
    a1 = np.where(any_obt, np.where(obtuse1, tri_area / 2.0, tri_area / 4.0), a1)
    a2 = np.where(any_obt, np.where(obtuse2, tri_area / 2.0, tri_area / 4.0), a2)

    area = np.zeros(len(V))
    np.add.at(area, i0, a0)
    np.add.at(area, i1, a1)
    np.add.at(area, i2, a2)
    return rows, cols, w, area


def levelset_speed(u, h, kappa_max):
    """Curvature-motion speed kappa * |grad u| with kappa clamped.

    Central differences; the outermost array layer gets zero speed.  The
    caller applies u += dt * speed (possibly after overriding the wall band
    with interior-extended values).
    """
    u = np.asarray(u, dtype=np.float64)
    c = u[1:-1, 1:-1, 1:-1]
    ux = (u[2:, 1:-1, 1:-1] - u[:-2, 1:-1, 1:-1]) / (2 * h)
    uy = (u[1:-1, 2:, 1:-1] - u[1:-1, :-2, 1:-1]) / (2 * h)
    uz = (u[1:-1, 1:-1, 2:] - u[1:-1, 1:-1, :-2]) / (2 * h)
    uxx = (u[2:, 1:-1, 1:-1] - 2 * c + u[:-2, 1:-1, 1:-1]) / h**2
    uyy = (u[1:-1, 2:, 1:-1] - 2 * c + u[1:-1, :-2, 1:-1]) / h**2
    uzz = (u[1:-1, 1:-1, 2:] - 2 * c + u[1:-1, 1:-1, :-2]) / h**2
    uxy = (
        u[2:, 2:, 1:-1] - u[2:, :-2, 1:-1] - u[:-2, 2:, 1:-1] + u[:-2, :-2, 1:-1]
    ) / (4 * h**2)
    uxz = (
        u[2:, 1:-1, 2:] - u[2:, 1:-1, :-2] - u[:-2, 1:-1, 2:] + u[:-2, 1:-1, :-2]
    ) / (4 * h**2)
    uyz = (
        u[1:-1, 2:, 2:] - u[1:-1, 2:, :-2] - u[1:-1, :-2, 2:] + u[1:-1, :-2, :-2]
    ) / (4 * h**2)
    g2 = ux**2 + uy**2 + uz**2
    eps = 1e-12
    num = (
        (uyy + uzz) * ux**2
        + (uxx + uzz) * uy**2
        + (uxx + uyy) * uz**2
        - 2.0 * (ux * uy * uxy + ux * uz * uxz + uy * uz * uyz)
    )
    kappa_g = num / (g2 + eps)  # curvature times |grad u|
    gmag = np.sqrt(g2)
    kappa = kappa_g / np.maximum(gmag, eps)
    kappa = np.clip(kappa, -kappa_max, kappa_max)
    out = np.zeros_like(u)
    out[1:-1, 1:-1, 1:-1] = kappa * gmag
    return out


def reinit_step(u, sgn, h, dt):
    """One Godunov upwind step of u_t = sgn * (1 - |grad u|).

    sgn is the smoothed sign of the field being reinitialized (fixed over the
    sweep).  The outermost layer is copied unchanged.
    """
    u = np.asarray(u, dtype=np.float64)
    c = u[1:-1, 1:-1, 1:-1]
    dxm = (c - u[:-2, 1:-1, 1:-1]) / h
    dxp = (u[2:, 1:-1, 1:-1] - c) / h
    dym = (c - u[1:-1, :-2, 1:-1]) / h
    dyp = (u[1:-1, 2:, 1:-1] - c) / h
    dzm = (c - u[1:-1, 1:-1, :-2]) / h
    dzp = (u[1:-1, 1:-1, 2:] - c) / h
    s = sgn[1:-1, 1:-1, 1:-1]
    pos = s > 0
    ap = np.maximum(dxm, 0.0) ** 2
    am = np.minimum(dxp, 0.0) ** 2
    bp = np.maximum(dym, 0.0) ** 2
    bm = np.minimum(dyp, 0.0) ** 2
    cp = np.maximum(dzm, 0.0) ** 2
    cm = np.minimum(dzp, 0.0) ** 2
    gpos = np.sqrt(ap + am + bp + bm + cp + cm)
    ap2 = np.minimum(dxm, 0.0) ** 2
    am2 = np.maximum(dxp, 0.0) ** 2
    bp2 = np.minimum(dym, 0.0) ** 2
    bm2 = np.maximum(dyp, 0.0) ** 2
    cp2 = np.minimum(dzm, 0.0) ** 2
    cm2 = np.maximum(dzp, 0.0) ** 2
    gneg = np.sqrt(ap2 + am2 + bp2 + bm2 + cp2 + cm2)
    g = np.where(pos, gpos, gneg)
    out = u.copy()
    out[1:-1, 1:-1, 1:-1] = c + dt * s * (1.0 - g)
    return out
