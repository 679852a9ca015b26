"""Mesh constructors: icospheres, revolved profiles, disks, slabs.

All constructors produce consistently oriented triangles with normals
pointing out of the enclosed region.
"""
import numpy as np

from .geom import unit


def icosphere(radius=1.0, center=(0.0, 0.0, 0.0), subdivisions=3):
    """Geodesic sphere mesh; edge length ~ radius / 2^subdivisions."""
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
            [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
            [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
        ],
        dtype=float,
    )
    faces = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    verts = unit(verts)
    for _ in range(subdivisions):
        edge_mid = {}
        new_faces = []
        vlist = list(verts)

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in edge_mid:
                m = unit(0.5 * (vlist[i] + vlist[j]))
                edge_mid[key] = len(vlist)
                vlist.append(m)
            return edge_mid[key]

        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        verts = np.array(vlist)
        faces = np.array(new_faces, dtype=np.int64)
    return np.asarray(center, dtype=float) + radius * verts, faces


def _ring_points(x, r, thetas, axis_frame):
    origin, ax, ey, ez = axis_frame
    pts = (
        origin[None, :]
        + x * ax[None, :]
        + r * (np.cos(thetas)[:, None] * ey[None, :] + np.sin(thetas)[:, None] * ez[None, :])
    )
    return pts


def _zip_rings(idx_a, th_a, idx_b, th_b, closed):
    """Triangulate the band between two rings by merging in angle order.

    Ring A is at the smaller axial station.  Emits triangles wound so the
    outward normal points away from the axis.
    """
    tris = []
    na, nb = len(idx_a), len(idx_b)
    if closed:
        th_a = np.concatenate([th_a, [th_a[0] + 2 * np.pi]])
        th_b = np.concatenate([th_b, [th_b[0] + 2 * np.pi]])
        ia = lambda k: idx_a[k % na]  # noqa: E731
        ib = lambda k: idx_b[k % nb]  # noqa: E731
        steps_a, steps_b = na, nb
    else:
        ia = lambda k: idx_a[k]  # noqa: E731
        ib = lambda k: idx_b[k]  # noqa: E731
        steps_a, steps_b = na - 1, nb - 1
    i = j = 0
    while i < steps_a or j < steps_b:
        adv_a = False
        if i < steps_a and j < steps_b:
            adv_a = th_a[i + 1] <= th_b[j + 1]
        elif i < steps_a:
            adv_a = True
        if adv_a:
            tris.append([ia(i), ia(i + 1), ib(j)])
            i += 1
        else:
            tris.append([ia(i), ib(j + 1), ib(j)])
            j += 1
    return tris


def revolve(
    profile_x,
    profile_r,
    target_edge,
    angle=(0.0, 2.0 * np.pi),
    axis_frame=None,
    close_start=True,
    close_end=True,
):
    """Surface of revolution of the profile r(x) about an axis.

    angle: (start, end); a full revolve is (0, 2*pi) and produces a closed
    band, anything shorter produces an open band whose seam vertices are
    flagged as boundary (returned in the last output).
    Returns (V, F, seam_mask).
    """
    profile_x = np.asarray(profile_x, dtype=float)
    profile_r = np.asarray(profile_r, dtype=float)
    if axis_frame is None:
        axis_frame = (
            np.zeros(3),
            np.array([1.0, 0.0, 0.0]),
            np.array([0.0, 1.0, 0.0]),
            np.array([0.0, 0.0, 1.0]),
        )
    a0, a1 = angle
    closed = abs((a1 - a0) - 2.0 * np.pi) < 1e-12

    verts = []
    ring_idx = []
    ring_th = []
    seam = []
    for x, r in zip(profile_x, profile_r):
        if r <= 1e-12:
            k = len(verts)
            verts.append(_ring_points(x, 0.0, np.array([0.0]), axis_frame)[0])
            seam.append(not closed)
            ring_idx.append(np.array([k]))
            ring_th.append(None)
            continue
        span = a1 - a0
        if closed:
            n = max(6, int(round(span * r / target_edge)))
            th = a0 + span * np.arange(n) / n
        else:
            n = max(3, int(round(span * r / target_edge)) + 1)
            th = np.linspace(a0, a1, n)
        k = len(verts)
        pts = _ring_points(x, r, th, axis_frame)
        verts.extend(pts)
        for m, _ in enumerate(th):
            seam.append((not closed) and (m == 0 or m == n - 1))
        ring_idx.append(k + np.arange(n))
        ring_th.append(th)

    tris = []
    for k in range(len(ring_idx) - 1):
        ia, ib = ring_idx[k], ring_idx[k + 1]
        if len(ia) == 1 and len(ib) == 1:
            continue
        if len(ia) == 1:
            if not close_start:
                continue
            apex = ia[0]
            nb = len(ib)
            rng = range(nb if closed else nb - 1)
            for m in rng:
                tris.append([apex, ib[(m + 1) % nb], ib[m]])
        elif len(ib) == 1:
            if not close_end:
                continue
            apex = ib[0]
            na = len(ia)
            rng = range(na if closed else na - 1)
            for m in rng:
                tris.append([apex, ia[m], ia[(m + 1) % na]])
        else:
            tris.extend(_zip_rings(ia, ring_th[k], ib, ring_th[k + 1], closed))
    return np.array(verts), np.array(tris, dtype=np.int64), np.array(seam, dtype=bool)


def sample_profile(fn, x0, x1, target_edge, curvature_refine=None):
    """Sample stations along [x0, x1] with spacing ~ target_edge along arc."""
    xs = [x0]
    x = x0
    while x < x1:
        r = max(fn(x), 1e-9)
        dr = (fn(min(x + 1e-6, x1)) - fn(max(x - 1e-6, x0))) / 2e-6
        ds = target_edge / np.sqrt(1.0 + dr * dr)
        if curvature_refine is not None:
            ds = min(ds, curvature_refine(x, r))
        x = min(x + max(ds, 1e-6), x1)
        xs.append(x)
    xs = np.array(xs)
    return xs, np.array([fn(x) for x in xs])


def dumbbell_profile(bell_radius=0.5, neck_radius=0.1, neck_half_width=2.0):
    """Smooth mean-convex dumbbell profile: cosh neck blended into sphere bells.

    neck_half_width is the cosh scale in units of neck_radius; values > 1
    keep the neck strictly mean-convex.  Returns (fn, x_tip) where the
    profile is even, fn(x) > 0 on (-x_tip, x_tip) and 0 at the tips.
    """
    rn = float(neck_radius)
    a = neck_half_width * rn
    if a <= rn:
        raise ValueError("neck_half_width must exceed 1 for mean-convexity")

    def r_neck(x):
        return rn * np.cosh(x / a)

    def r_neck_slope(x):
        return rn * np.sinh(x / a) / a

    # tangency station: r * sqrt(1 + r'^2) == bell_radius
    def g(x):
        return r_neck(x) * np.sqrt(1.0 + r_neck_slope(x) ** 2) - bell_radius

    lo, hi = 0.0, a * np.arccosh(bell_radius / rn)
    if g(hi) < 0:
        hi *= 2.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            hi = mid
        else:
            lo = mid
    xj = 0.5 * (lo + hi)
    rj, sj = r_neck(xj), r_neck_slope(xj)
    xc = xj + rj * sj  # bell center from tangency
    x_tip = xc + bell_radius

    def fn(x):
        x = abs(x)
        if x <= xj:
            return r_neck(x)
        if x >= x_tip:
            return 0.0
        return np.sqrt(max(bell_radius**2 - (x - xc) ** 2, 0.0))

    return fn, x_tip


def dumbbell_mesh(
    bell_radius=0.5,
    neck_radius=0.1,
    neck_half_width=2.0,
    target_edge=0.05,
    angle=(0.0, 2 * np.pi),
    axis_frame=None,
):
    fn, x_tip = dumbbell_profile(bell_radius, neck_radius, neck_half_width)

    def refine(x, r):
        # resolve the hoop curvature: a few stations across the neck scale
        return max(0.35 * r, target_edge * 0.2)

    xs, rs = sample_profile(fn, -x_tip, x_tip, target_edge, refine)
    rs[0] = rs[-1] = 0.0
    return revolve(xs, rs, target_edge, angle=angle, axis_frame=axis_frame)


def capped_cylinder(radius=1.0, half_length=3.0, target_edge=0.1, axis_frame=None):
    """Cylinder of the given radius closed by hemispherical caps."""

    def fn(x):
        ax = abs(x)
        if ax <= half_length:
            return radius
        if ax >= half_length + radius:
            return 0.0
        return np.sqrt(max(radius**2 - (ax - half_length) ** 2, 0.0))

    x_tip = half_length + radius
    xs, rs = sample_profile(fn, -x_tip, x_tip, target_edge)
    rs[0] = rs[-1] = 0.0
    return revolve(xs, rs, target_edge, axis_frame=axis_frame)


def open_cylinder(radius, half_length, target_edge, axis_frame=None, angle=(0.0, 2 * np.pi)):
    """Cylinder band with open ends (used for analytic neck fixtures)."""
    n_st = max(4, int(round(2 * half_length / target_edge)) + 1)
    xs = np.linspace(-half_length, half_length, n_st)
    rs = np.full_like(xs, radius)
    return revolve(xs, rs, target_edge, angle=angle, axis_frame=axis_frame, close_start=False, close_end=False)


def flat_disk(radius=1.0, target_edge=0.1, center=(0.0, 0.0, 0.0), normal=(0.0, 0.0, 1.0)):
    """Flat disk of concentric rings; outer-ring vertices form the boundary.

    Returns (V, F, boundary_mask).  Normal of the triangles is `normal`.
    """
    center = np.asarray(center, dtype=float)
    nrm = unit(np.asarray(normal, dtype=float))
    from .geom import orthonormal_basis

    e1, e2 = orthonormal_basis(nrm)
    n_rings = max(2, int(round(radius / target_edge)))
    verts = [center.copy()]
    boundary = [False]
    ring_idx = [np.array([0])]
    ring_th = [None]
    for k in range(1, n_rings + 1):
        r = radius * k / n_rings
        n = max(6, int(round(2 * np.pi * r / target_edge)))
        th = 2 * np.pi * np.arange(n) / n
        base = len(verts)
        pts = center[None, :] + r * (
            np.cos(th)[:, None] * e1[None, :] + np.sin(th)[:, None] * e2[None, :]
        )
        verts.extend(pts)
        boundary.extend([k == n_rings] * n)
        ring_idx.append(base + np.arange(n))
        ring_th.append(th)
    tris = []
    ib = ring_idx[1]
    nb = len(ib)
    for m in range(nb):
        tris.append([0, ib[m], ib[(m + 1) % nb]])
    for k in range(1, n_rings):
        tris.extend(_zip_rings(ring_idx[k], ring_th[k], ring_idx[k + 1], ring_th[k + 1], True))
    V = np.array(verts)
    F = np.array(tris, dtype=np.int64)
    # wind triangles so their normal matches `nrm`
    p0, p1, p2 = V[F[:, 0]], V[F[:, 1]], V[F[:, 2]]
    fn_ = np.cross(p1 - p0, p2 - p0)
    flip = fn_ @ nrm < 0
    F[flip] = F[flip][:, [0, 2, 1]]
    return V, F, np.array(boundary, dtype=bool)


def lens_slab(face_radius_of_curvature, half_thickness, wall_sphere_radius, target_edge):
    """Two gently bulged disks forming a slab that meets a ball wall.

    The faces are spherical caps of radius R = face_radius_of_curvature with
    apexes at z = +-half_thickness; both are trimmed where they meet the
    sphere of radius wall_sphere_radius centered at the origin.  Returns
    (V, F, wall_mask); the enclosed slab region is completed by the wall band.
    """
    R = float(face_radius_of_curvature)
    tau = float(half_thickness)
    Rw = float(wall_sphere_radius)
    a = R - tau  # cap center depth
    # cap/wall intersection: rho^2 + z^2 = Rw^2 and rho^2 + (z + a)^2 = R^2
    zw = (R**2 - Rw**2 - a**2) / (2.0 * a)
    if not 0.0 < zw < tau:
        raise ValueError("lens faces do not reach the wall; adjust parameters")
    rho_w = np.sqrt(Rw**2 - zw**2)

    def face_z(rho):
        return np.sqrt(R**2 - rho**2) - a

    n_rings = max(3, int(round(rho_w / target_edge)))
    parts_v, parts_f, parts_w = [], [], []
    for sign in (+1.0, -1.0):
        verts = [np.array([0.0, 0.0, sign * tau])]
        wall = [False]
        ring_idx = [np.array([0])]
        ring_th = [None]
        for k in range(1, n_rings + 1):
            rho = rho_w * k / n_rings
            n = max(6, int(round(2 * np.pi * rho / target_edge)))
            th = 2 * np.pi * np.arange(n) / n
            base = len(verts)
            z = sign * face_z(rho)
            pts = np.column_stack([rho * np.cos(th), rho * np.sin(th), np.full(n, z)])
            verts.extend(pts)
            wall.extend([k == n_rings] * n)
            ring_idx.append(base + np.arange(n))
            ring_th.append(th)
        tris = []
        ib = ring_idx[1]
        nb = len(ib)
        for m in range(nb):
            tris.append([0, ib[m], ib[(m + 1) % nb]])
        for k in range(1, n_rings):
            tris.extend(_zip_rings(ring_idx[k], ring_th[k], ring_idx[k + 1], ring_th[k + 1], True))
        V = np.array(verts)
        F = np.array(tris, dtype=np.int64)
        # outward normal of the slab points away from z = 0
        p0, p1, p2 = V[F[:, 0]], V[F[:, 1]], V[F[:, 2]]
        fn_ = np.cross(p1 - p0, p2 - p0)
        flip = fn_[:, 2] * sign < 0
        F[flip] = F[flip][:, [0, 2, 1]]
        parts_v.append(V)
        parts_f.append(F)
        parts_w.append(np.array(wall, dtype=bool))
    off = len(parts_v[0])
    V = np.vstack(parts_v)
    F = np.vstack([parts_f[0], parts_f[1] + off])
    wall = np.concatenate(parts_w)
    return V, F, wall


def merge_duplicate_vertices(V, F, tol):
    """Weld vertices closer than tol; returns (V, F, index_map)."""
    order = np.lexsort((V[:, 2], V[:, 1], V[:, 0]))
    keep = []
    mapping = np.empty(len(V), dtype=np.int64)
    for idx in order:
        found = -1
        for k in reversed(keep[-8:]):
            if np.linalg.norm(V[idx] - V[k]) < tol:
                found = k
                break
        if found < 0:
            keep.append(idx)
            mapping[idx] = idx
        else:
            mapping[idx] = found
    remap = {old: new for new, old in enumerate(sorted(set(mapping)))}
    newV = V[sorted(set(mapping))]
    newF = np.array([[remap[mapping[v]] for v in tri] for tri in F], dtype=np.int64)
    good = (newF[:, 0] != newF[:, 1]) & (newF[:, 1] != newF[:, 2]) & (newF[:, 0] != newF[:, 2])
    return newV, newF[good], mapping
