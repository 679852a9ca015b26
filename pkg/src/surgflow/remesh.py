"""Isotropic remeshing: edge split/collapse/flip plus tangential smoothing.

Wall vertices stay on the wall throughout.  An optional per-vertex sizing
array makes the target edge length adaptive (the flow derives it from
curvature so shrinking necks stay resolved).
"""
import numpy as np

from .errors import RemeshFailure
from .geom import unit
from .mesh import SurfaceMesh


def _edge_map(F):
    """dict sorted-edge -> list of (triangle index, opposite corner)."""
    em = {}
    for t, (a, b, c) in enumerate(F):
        for (u, v, w) in ((a, b, 2), (b, c, 0), (c, a, 1)):
            key = (u, v) if u < v else (v, u)
            em.setdefault(key, []).append((t, w))
    return em


def _lift_midpoint(Va, Vb, na, nb):
    """Edge midpoint pushed onto the circumscribed arc of the endpoints."""
    mid = 0.5 * (Va + Vb)
    chord = np.linalg.norm(Vb - Va)
    nsum = na + nb
    norm = np.linalg.norm(nsum)
    if norm < 1e-12:
        return mid
    cosang = np.clip(np.dot(na, nb), -1.0, 1.0)
    theta = np.arccos(cosang)
    return mid + (chord * theta / 8.0) * (nsum / norm)


class _Work:
    def __init__(self, mesh, sizing, target):
        self.V = [v for v in mesh.V]
        self.F = [list(t) for t in mesh.F]
        self.wall = list(mesh.wall)
        if mesh.normal is None:
            mesh.estimate_curvature()
        self.normal = [n for n in mesh.normal]
        if sizing is None:
            self.size = [float(target)] * len(self.V)
        else:
            self.size = [float(s) for s in sizing]
        self.alive = [True] * len(self.F)

    def live_faces(self):
        return np.array([f for f, ok in zip(self.F, self.alive) if ok], dtype=np.int64)

    def edge_target(self, a, b):
        return 0.5 * (self.size[a] + self.size[b])


def _split_pass(w):
    F = w.live_faces()
    em = _edge_map(F)
    lengths = []
    for key in em:
        a, b = key
        ln = np.linalg.norm(w.V[a] - w.V[b])
        lengths.append((ln / w.edge_target(a, b), ln, key))
    # worst relative oversize first (sizing varies orders of magnitude)
    lengths.sort(key=lambda t: (-t[0], t[2]))
    # rebuild an indexable face list aligned with em
    faces = [list(f) for f in F]
    face_used = [False] * len(faces)
    new_faces = []
    n_split = 0
    for ratio, ln, (a, b) in lengths:
        if ratio <= 4.0 / 3.0:
            break
        tris = em[(a, b)]
        if any(face_used[t] for t, _ in tris):
            continue
        both_wall = w.wall[a] and w.wall[b]
        boundary = len(tris) == 1
        mid = _lift_midpoint(w.V[a], w.V[b], w.normal[a], w.normal[b])
        m = len(w.V)
        w.V.append(mid)
        w.wall.append(bool(both_wall and boundary))
        w.normal.append(unit(w.normal[a] + w.normal[b]))
        w.size.append(0.5 * (w.size[a] + w.size[b]))
        for t, _ in tris:
            face_used[t] = True
            tri = faces[t]
            ia = tri.index(a)
            ib = tri.index(b)
            tri_b = list(tri)
            tri[ib] = m  # keeps orientation: a..m replaces a..b
            tri_b[ia] = m
            new_faces.append(tri_b)
        n_split += 1
    w.F = faces + new_faces
    w.alive = [True] * len(w.F)
    return n_split


def _vertex_ring(F):
    ring = {}
    for t, (a, b, c) in enumerate(F):
        ring.setdefault(a, set()).update((b, c))
        ring.setdefault(b, set()).update((a, c))
        ring.setdefault(c, set()).update((a, b))
    return ring


def _collapse_pass(w, min_keep=8):
    F = w.live_faces()
    if len(F) <= min_keep:
        return 0
    em = _edge_map(F)
    ring = _vertex_ring(F)
    vert_tris = {}
    for t, tri in enumerate(F):
        for v in tri:
            vert_tris.setdefault(v, []).append(t)
    lengths = []
    for key in em:
        a, b = key
        ln = np.linalg.norm(w.V[a] - w.V[b])
        lengths.append((ln / w.edge_target(a, b), key))
    lengths.sort(key=lambda t: (t[0], t[1]))
    touched = set()
    dead_tris = set()
    n_col = 0
    faces = [list(f) for f in F]
    for ratio, (a, b) in lengths:
        if ratio >= 0.8:
            break
        if a in touched or b in touched:
            continue
        tris = em[(a, b)]
        boundary_edge = len(tris) == 1
        wa, wb = w.wall[a], w.wall[b]
        if wa and wb and not boundary_edge:
            continue  # interior chord between wall vertices: collapsing pinches
        # link condition
        shared = ring[a] & ring[b]
        apex = {faces[t][k] for t, k in tris}
        if shared != apex:
            continue
        if any(t in dead_tris for t, _ in tris):
            continue
        # collapse target
        if wa and wb:
            pos = 0.5 * (np.asarray(w.V[a]) + np.asarray(w.V[b]))
            is_wall = True
        elif wa:
            pos, is_wall = np.asarray(w.V[a]), True
        elif wb:
            pos, is_wall = np.asarray(w.V[b]), True
        else:
            pos = _lift_midpoint(w.V[a], w.V[b], w.normal[a], w.normal[b])
            is_wall = False
        # reject collapses that invert or stretch the neighborhood
        ok = True
        for v_old in (a, b):
            for t in vert_tris.get(v_old, ()):
                if t in dead_tris:
                    continue
                tri = faces[t]
                if a in tri and b in tri:
                    continue
                p = [pos if x in (a, b) else np.asarray(w.V[x]) for x in tri]
                n_new = np.cross(p[1] - p[0], p[2] - p[0])
                q = [np.asarray(w.V[x]) for x in tri]
                n_old = np.cross(q[1] - q[0], q[2] - q[0])
                if np.dot(n_new, n_old) <= 1e-3 * np.linalg.norm(n_old) ** 2:
                    ok = False
                    break
                for e0, e1 in ((0, 1), (1, 2), (2, 0)):
                    if np.linalg.norm(p[e0] - p[e1]) > (4.0 / 3.0) * w.edge_target(
                        tri[e0], tri[e1]
                    ):
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
        if not ok:
            continue
        # commit: a absorbs b
        w.V[a] = pos
        w.wall[a] = is_wall
        w.size[a] = 0.5 * (w.size[a] + w.size[b])
        w.normal[a] = unit(np.asarray(w.normal[a]) + np.asarray(w.normal[b]))
        for t, _ in tris:
            dead_tris.add(t)
        for t in vert_tris.get(b, ()):
            if t in dead_tris:
                continue
            faces[t] = [a if x == b else x for x in faces[t]]
            vert_tris.setdefault(a, []).append(t)
        touched.update(shared)
        touched.add(a)
        touched.add(b)
        n_col += 1
    w.F = [f for t, f in enumerate(faces) if t not in dead_tris]
    w.alive = [True] * len(w.F)
    return n_col


def _flip_pass(w):
    F = w.live_faces()
    em = _edge_map(F)
    valence = {}
    boundary_v = set()
    for (a, b), tris in em.items():
        valence[a] = valence.get(a, 0) + 1
        valence[b] = valence.get(b, 0) + 1
        if len(tris) == 1:
            boundary_v.add(a)
            boundary_v.add(b)
    existing = set(em.keys())

    def tgt(v):
        return 4 if v in boundary_v else 6

    faces = [list(f) for f in F]
    face_used = [False] * len(faces)
    n_flip = 0
    for (a, b), tris in sorted(em.items()):
        if len(tris) != 2:
            continue
        (t1, k1), (t2, k2) = tris
        if face_used[t1] or face_used[t2]:
            continue
        c = faces[t1][k1]
        d = faces[t2][k2]
        key_cd = (c, d) if c < d else (d, c)
        if key_cd in existing:
            continue
        dev_now = sum((valence[v] - tgt(v)) ** 2 for v in (a, b, c, d))
        dev_new = (
            (valence[a] - 1 - tgt(a)) ** 2
            + (valence[b] - 1 - tgt(b)) ** 2
            + (valence[c] + 1 - tgt(c)) ** 2
            + (valence[d] + 1 - tgt(d)) ** 2
        )
        if dev_new >= dev_now:
            continue
        pa, pb, pc, pd = (np.asarray(w.V[x]) for x in (a, b, c, d))
        n_old = np.cross(pb - pa, pc - pa) + np.cross(pa - pb, pd - pb)
        n1 = np.cross(pd - pc, pa - pc)
        n2 = np.cross(pc - pd, pb - pd)
        if np.dot(n1, n_old) <= 1e-12 or np.dot(n2, n_old) <= 1e-12:
            continue
        area1 = np.linalg.norm(n1)
        area2 = np.linalg.norm(n2)
        lcd = np.linalg.norm(pc - pd)
        if area1 < 1e-3 * lcd**2 or area2 < 1e-3 * lcd**2:
            continue
        # orientation: t1 = (a, b, c) pattern -> (c, d, a)-style replacement
        t1v = faces[t1]
        ia = t1v.index(a)
        # rebuild keeping winding: triangle (a, b, c) and (b, a, d)
        if t1v[(ia + 1) % 3] == b:
            faces[t1] = [a, d, c]
            faces[t2] = [b, c, d]
        else:
            faces[t1] = [a, c, d]
            faces[t2] = [b, d, c]
        face_used[t1] = face_used[t2] = True
        valence[a] -= 1
        valence[b] -= 1
        valence[c] += 1
        valence[d] += 1
        existing.add(key_cd)
        n_flip += 1
    w.F = faces
    w.alive = [True] * len(w.F)
    return n_flip


def _project_to_reference(w, reference, domain):
    """Pull every vertex back onto the input surface.

    Keeps remeshing exactly surface-preserving: tangential smoothing would
    otherwise accumulate normal drift, which reads as spurious curvature at
    profile junctions.  Wall vertices stay on the wall instead.
    """
    from .mesh import closest_point_on_mesh

    V = np.asarray(w.V)
    wallm = np.asarray(w.wall)
    free = ~wallm
    if np.any(free):
        cp, _ = closest_point_on_mesh(V[free], reference)
        V[free] = cp
    if domain is not None and np.any(wallm):
        q, _ = domain.project_many(V[wallm])
        V[wallm] = q
    w.V = [v for v in V]


def _smooth_pass(w, domain, lam=0.5):
    F = w.live_faces()
    V = np.asarray(w.V)
    n = len(V)
    em = _edge_map(F)
    boundary_nbrs = {}
    for (a, b), tris in em.items():
        if len(tris) == 1:
            boundary_nbrs.setdefault(a, []).append(b)
            boundary_nbrs.setdefault(b, []).append(a)
    p0, p1, p2 = V[F[:, 0]], V[F[:, 1]], V[F[:, 2]]
    tri_area = 0.5 * np.linalg.norm(np.cross(p1 - p0, p2 - p0), axis=1)
    tri_cent = (p0 + p1 + p2) / 3.0
    acc = np.zeros((n, 3))
    wsum = np.zeros(n)
    for k in range(3):
        np.add.at(acc, F[:, k], tri_area[:, None] * tri_cent)
        np.add.at(wsum, F[:, k], tri_area)
    has = wsum > 0
    cent = V.copy()
    cent[has] = acc[has] / wsum[has][:, None]
    normals = np.asarray(w.normal)
    disp = cent - V
    disp -= np.einsum("ij,ij->i", disp, normals)[:, None] * normals
    newV = V + lam * disp
    for v, nbrs in boundary_nbrs.items():
        if len(nbrs) == 2:
            mid = 0.5 * (V[nbrs[0]] + V[nbrs[1]])
            newV[v] = V[v] + lam * 0.5 * (mid - V[v])
        else:
            newV[v] = V[v]
    wall = np.asarray(w.wall)
    if domain is not None and np.any(wall):
        q, _ = domain.project_many(newV[wall])
        newV[wall] = q
    w.V = [v for v in newV]


def remesh(
    mesh,
    target_edge,
    domain=None,
    sizing=None,
    iterations=5,
    min_angle_deg=5.0,
    strict=True,
):
    """Isotropic remeshing toward the target edge length (or sizing field).

    Preserves component and boundary-loop counts; raises RemeshFailure when
    quality targets are unreachable within the iteration budget.
    """
    n_comp0 = mesh.connected_components().n_components if mesh.H is not None else None
    n_loops0 = len(mesh.boundary_loops())
    reference = SurfaceMesh(mesh.V.copy(), mesh.F.copy())
    w = _Work(mesh, sizing, target_edge)
    for _ in range(iterations):
        ns = _split_pass(w)
        nc = _collapse_pass(w)
        nf = _flip_pass(w)
        _smooth_pass(w, domain)
        _project_to_reference(w, reference, domain)
        if ns == 0 and nc == 0 and nf == 0:
            _smooth_pass(w, domain)
            _project_to_reference(w, reference, domain)
            break
    V = np.asarray(w.V)
    F = np.asarray(w.F, dtype=np.int64)
    used = np.unique(F)
    remap = -np.ones(len(V), dtype=np.int64)
    remap[used] = np.arange(len(used))
    out = SurfaceMesh(V[used], remap[F], np.asarray(w.wall)[used])
    if domain is not None:
        out.snap_wall(domain)
    if strict:
        if not out.check_manifold():
            raise RemeshFailure("remeshing produced a non-manifold surface")
        if out.min_triangle_angle() < np.deg2rad(min_angle_deg):
            raise RemeshFailure(
                f"min angle {np.rad2deg(out.min_triangle_angle()):.2f} deg below target"
            )
        if len(out.boundary_loops()) != n_loops0:
            raise RemeshFailure("remeshing changed the boundary loop count")
        if n_comp0 is not None:
            out.estimate_curvature(domain)
            if out.connected_components().n_components != n_comp0:
                raise RemeshFailure("remeshing changed the component count")
    return out


def curvature_sizing(mesh, base_edge, resolve=0.35, floor_scale=1e-3):
    """Per-vertex target edge from curvature: ~18 edges around a curve of
    radius 1/kmax, clamped to [floor_scale*base, base]."""
    kmax = np.maximum(np.abs(mesh.lam1), np.abs(mesh.lam2))
    kmax = np.maximum(kmax, 1e-12)
    h = resolve / kmax
    return np.clip(h, floor_scale * base_edge, base_edge)
