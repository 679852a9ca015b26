"""Neck surgery: detection, minimal separating collections, cap replacement,
and discarding of high-curvature components.

Conventions: a neck of curvature H has geometric tube radius r = 1/H (the
mesh module's H is the sum of principal curvatures, so the unit cylinder has
H = 1).  Quality is the measured closeness (positions + normals) of the
rescaled backward history to the exactly shrinking round cylinder.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (
    ChartOverflow,
    InsufficientHistory,
    SeparationImpossible,
    StitchFailure,
)
from .flow import FlowState, smoothed_H
from .geom import orthonormal_basis, unit
from .mesh import SurfaceMesh, submesh


@dataclass
class SurgeryParams:
    """Curvature scales and surgery quality knobs.

    delta is the formal neck-quality parameter (validated against the cap
    separation via delta <= 1/(100 gamma)); delta_check is the measured
    quality threshold the detector can actually enforce on meshes, and also
    sets the fit-ball span min(1/delta_check, 10) in neck radii.
    """

    h_thick: float
    h_neck: float
    h_trigger: float
    delta: float = 1.0 / 300.0
    gamma: float = 3.0
    delta_check: float = 0.8
    quality_percentile: float = 95.0
    seed_band: tuple = (0.8, None)  # H window in h_neck units; None -> h_trigger/(2.5 h_neck)
    anisotropy: float = 0.4  # seed gate: lam1 <= anisotropy * lam2

    def __post_init__(self):
        if not (self.h_thick < self.h_neck < self.h_trigger):
            raise ValueError("need h_thick < h_neck < h_trigger")
        if self.h_neck / self.h_thick < 10.0 or self.h_trigger / self.h_neck < 10.0:
            raise ValueError("curvature scales must be separated by factor >= 10")
        if self.delta > 1.0 / (100.0 * self.gamma):
            raise ValueError("delta must satisfy delta <= 1/(100 gamma)")

    def fit_span(self):
        return min(1.0 / self.delta_check, 10.0)


@dataclass(eq=False)
class NeckCandidate:
    center: np.ndarray
    radius: float
    axis: np.ndarray
    quality: float
    kind: str  # "interior" | "half"
    time: float
    seed_vertex: int = -1

    def as_dict(self):
        return {
            "kind": self.kind,
            "center": [float(x) for x in self.center],
            "radius": float(self.radius),
            "axis": [float(x) for x in self.axis],
            "quality": float(self.quality),
            "time": float(self.time),
        }


class StandardCapProfile:
    """Radial profile f(s), s in [0, 2], of the standard cap.

    f(0) = 0 at the tip, f identically 1 from s = 2 on (round half-cylinder
    of radius 1 outside a ball of radius 2); constructed as
    f = sqrt(1 - q(s)^2) with q = (1 - s/2)^3, which meets the cylinder with
    two vanishing derivatives and gives a convex surface of revolution.
    """

    def __init__(self, n_samples=512):
        s = np.linspace(0.0, 2.0, n_samples)
        q = (1.0 - s / 2.0) ** 3
        f = np.sqrt(np.maximum(1.0 - q * q, 0.0))
        self.s = s
        self.f = f
        self._spline = CubicSpline(s, f)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = np.where(s >= 2.0, 1.0, self._spline(np.clip(s, 0.0, 2.0)))
        return np.clip(out, 0.0, 1.0)

    def is_convex(self):
        """f'' <= 0 wherever f < 1 (checked away from the sqrt tip)."""
        s = self.s[(self.s > 0.05) & (self.f < 0.999)]
        return bool(np.all(self._spline(s, 2) <= 1e-6))

    def max_curvature(self):
        """Largest principal curvature magnitude of the unit-scale cap."""
        s = np.linspace(0.02, 1.999, 2000)
        f = self._spline(s)
        fp = self._spline(s, 1)
        fpp = self._spline(s, 2)
        k_mer = -fpp / (1.0 + fp * fp) ** 1.5
        k_hoop = 1.0 / (f * np.sqrt(1.0 + fp * fp))
        return float(np.max(np.maximum(np.abs(k_mer), np.abs(k_hoop))))


@dataclass
class SurgeryEvent:
    time: float
    necks: list
    discarded: list
    r_sharp: float
    pre_area: float = 0.0
    post_area: float = 0.0
    pre_volume: float = 0.0
    post_volume: float = 0.0
    warnings: list = field(default_factory=list)
    cap_stats: list = field(default_factory=list)

    def as_dict(self):
        return {
            "type": "surgery",
            "time": float(self.time),
            "r_sharp": float(self.r_sharp),
            "necks": [n.as_dict() for n in self.necks],
            "discarded": self.discarded,
            "pre_area": float(self.pre_area),
            "post_area": float(self.post_area),
            "pre_volume": float(self.pre_volume),
            "post_volume": float(self.post_volume),
            "warnings": list(self.warnings),
            "cap_stats": self.cap_stats,
        }


# ---------------------------------------------------------------- detection


def _grow_patch(mesh, seed, max_dist, h_floor, h_ceiling=np.inf):
    """Vertex patch grown from the seed along edges, limited to the tube.

    Stops at vertices farther than max_dist from the seed or with curvature
    outside [h_floor, h_ceiling]: the band keeps the fit on the seed's own
    curvature scale (below lie the bells, above lies the pinching waist)."""
    adj = mesh.vertex_adjacency()
    hs = mesh.H
    V = mesh.V
    seen = {seed}
    frontier = [seed]
    keep = [seed]
    p0 = V[seed]
    while frontier:
        nxt = []
        for v in frontier:
            for w in adj.indices[adj.indptr[v] : adj.indptr[v + 1]]:
                w = int(w)
                if w in seen:
                    continue
                seen.add(w)
                if np.linalg.norm(V[w] - p0) > max_dist:
                    continue
                if not (h_floor <= hs[w] <= h_ceiling):
                    continue
                keep.append(w)
                nxt.append(w)
        frontier = nxt
    return np.array(sorted(keep), dtype=np.int64)


def _fit_cylinder(points, normals, r0, iters=4):
    """Cylinder (center, axis, radius) fit to a tube patch.

    Axis from the smallest principal direction of the normal covariance;
    center/radius refined by radial averaging."""
    nn = np.einsum("ni,nj->ij", normals, normals)
    w_, vecs = np.linalg.eigh(nn)
    axis = vecs[:, 0]
    # center initial guess: vertices pushed inward by r0 along their normals
    c = np.mean(points - r0 * normals, axis=0)
    r = r0
    for _ in range(iters):
        rel = points - c
        perp = rel - np.outer(rel @ axis, axis)
        rho = np.linalg.norm(perp, axis=1)
        rho = np.maximum(rho, 1e-30)
        radial = perp / rho[:, None]
        r = float(np.mean(rho))
        corr = np.mean((rho - r)[:, None] * radial, axis=0)
        c = c + corr
        c = c - (c @ axis - np.mean(points @ axis)) * axis
    return c, unit(axis), r


def _reflect_points(pts, foot, nu):
    return pts - 2.0 * ((pts - foot) @ nu)[:, None] * nu[None, :]


def _slice_quality(
    mesh_s, center, axis, r, rho_model, span, percentile, reflect=None
):
    """(deviation + angle, coverage ok) of one history slice vs the model."""
    V = mesh_s.V
    if mesh_s.normal is None:
        mesh_s.estimate_curvature(quadric=False)
    N = mesh_s.normal
    if reflect is not None:
        foot, nu = reflect
        V = np.vstack([V, _reflect_points(V, foot, nu)])
        N = np.vstack([N, N - 2.0 * (N @ nu)[:, None] * nu[None, :]])
    rel = V - center
    u = rel @ axis
    perp = rel - np.outer(u, axis)
    rho = np.linalg.norm(perp, axis=1)
    sel = (np.abs(u) <= span * r) & (np.abs(rho - rho_model) <= 0.9 * rho_model)
    if np.count_nonzero(sel) < 24:
        return np.inf, False
    rho_s = rho[sel]
    radial = perp[sel] / np.maximum(rho_s, 1e-30)[:, None]
    dev = np.abs(rho_s - rho_model) / r
    dots = np.clip(np.einsum("ij,ij->i", radial, N[sel]), -1.0, 1.0)
    ang = np.arccos(np.abs(dots))
    # angular coverage around the tube
    theta = np.arctan2(perp[sel] @ _ortho(axis)[1], perp[sel] @ _ortho(axis)[0])
    bins = np.unique(((theta + np.pi) / (2 * np.pi) * 12).astype(int) % 12)
    if len(bins) < 11:
        return np.inf, False
    q = float(np.percentile(dev, percentile) + np.percentile(ang, percentile))
    return q, True


def _ortho(axis):
    return orthonormal_basis(axis)


def detect_necks(state, params, domain, kinds=("interior", "half")):
    """Strong-neck candidates on the current slice against backward history.

    Seeds are vertices with smoothed H in [0.8, 1.25] h_neck; each seed's
    neighborhood is fit by a cylinder and scored against the exactly
    shrinking round cylinder over the rescaled backward window (-1, 0],
    sampled at five times.  Candidates worse than delta_check are dropped;
    overlapping candidates are suppressed keeping the best quality.
    """
    mesh = state.mesh
    if mesh.lam1 is None:
        mesh.estimate_curvature(domain, quadric=True)
    hs = smoothed_H(mesh)
    h_neck = params.h_neck
    lo, hi = params.seed_band
    h_hi = (hi * h_neck) if hi else params.h_trigger / 2.5
    band = (hs >= lo * h_neck) & (hs <= h_hi)
    # cylinder-like anisotropy: a shrinking sphere has lam1 ~ lam2 and can
    # never seed a neck
    band &= mesh.lam1 <= params.anisotropy * np.maximum(mesh.lam2, 1e-30)
    seeds = np.flatnonzero(band)
    if len(seeds) == 0:
        return []
    span = params.fit_span()
    window = 1.2 * (1.0 / (0.8 * h_neck)) ** 2
    if state.history_depth() < window - 1e-13:
        raise InsufficientHistory(
            f"history depth {state.history_depth():.3g} below {window:.3g}"
        )

    # spatial clustering of seeds: one representative per cell, preferring
    # the smallest curvature (largest tube radius) in each cell
    cell = 0.5 / h_neck
    keys = {}
    for v in seeds:
        key = tuple((mesh.V[v] / cell).astype(np.int64))
        if key not in keys or hs[v] < hs[keys[key]]:
            keys[key] = int(v)
    reps = sorted(keys.values())

    eps_wall = mesh.wall_tolerance(domain) * 10
    taus = np.array([-1.0, -0.75, -0.5, -0.25, 0.0])
    t_now = state.time
    cands = []
    for seed in reps:
        r0 = 1.0 / hs[seed]
        near_wall = bool(mesh.wall[seed])
        if not near_wall:
            d_wall = -float(domain.signed_distance(mesh.V[seed]))
            if d_wall < span * r0:
                # too close to the wall for an interior fit ball but not a
                # wall seed: skip (the wall seed covers this neck)
                continue
        kind = "half" if near_wall else "interior"
        if kind not in kinds:
            continue
        patch = _grow_patch(
            mesh, seed, 1.3 * span * r0, 0.45 * hs[seed], 2.2 * hs[seed]
        )
        if len(patch) < 16:
            continue
        pts = mesh.V[patch]
        nrm = mesh.normal[patch]
        reflect = None
        if kind == "half":
            foot, nu = domain.project_to_boundary(mesh.V[seed])
            reflect = (foot, nu)
            pts = np.vstack([pts, _reflect_points(pts, foot, nu)])
            nrm = np.vstack([nrm, nrm - 2.0 * (nrm @ nu)[:, None] * nu[None, :]])
        c, axis, r = _fit_cylinder(pts, nrm, r0)
        if kind == "half":
            foot, nu = reflect
            axis = unit(axis - (axis @ nu) * nu)
            c, _ = domain.project_to_boundary(c)
        if not np.isfinite(r) or r <= 0:
            continue
        quality = 0.0
        ok = True
        for tau in taus:
            t_target = t_now + tau * r * r
            t_s, mesh_s = state.frame_at(t_target)
            tau_actual = (t_s - t_now) / (r * r)
            rho_model = r * np.sqrt(max(1.0 - 2.0 * tau_actual, 1e-12))
            q, cov = _slice_quality(
                mesh_s,
                c,
                axis,
                r,
                rho_model,
                span,
                params.quality_percentile,
                reflect=reflect,
            )
            if not cov:
                ok = False
                break
            quality = max(quality, q)
        if not ok or quality > params.delta_check:
            continue
        cands.append(
            NeckCandidate(
                center=np.asarray(c),
                radius=float(r),
                axis=np.asarray(axis),
                quality=float(quality),
                kind=kind,
                time=float(t_now),
                seed_vertex=int(seed),
            )
        )
    # non-maximal suppression: within comparable quality prefer the largest
    # radius (cut as close to the 1/h_neck scale as quality permits), then
    # drop overlapping candidates
    cands.sort(key=lambda cd: (round(cd.quality / 0.15), -cd.radius, cd.seed_vertex))
    kept = []
    for cd in cands:
        clash = any(
            np.linalg.norm(cd.center - other.center)
            < params.gamma * (cd.radius + other.radius)
            for other in kept
        )
        if not clash:
            kept.append(cd)
    kept.sort(key=lambda cd: cd.seed_vertex)
    return kept


# ------------------------------------------------- minimal separating set


def _cut_vertex_set(mesh, cand):
    rel = mesh.V - cand.center
    u = rel @ cand.axis
    rho = np.linalg.norm(rel - np.outer(u, cand.axis), axis=1)
    return (np.abs(u) <= 0.5 * cand.radius) & (rho <= 1.6 * cand.radius)


def _separates(mesh, cut_masks, trig, thick):
    import scipy.sparse as sp
    from scipy.sparse.csgraph import connected_components as cc

    removed = np.zeros(mesh.n_vertices, dtype=bool)
    for m in cut_masks:
        removed |= m
    keep = ~removed
    if not np.any(trig & keep):
        return True  # the whole trigger set is excised
    adj = mesh.vertex_adjacency()
    sub = adj[keep][:, keep]
    _, labels = cc(sub, directed=False)
    lab_trig = set(labels[(trig & keep)[keep]])
    lab_thick = set(labels[(thick & keep)[keep]])
    return len(lab_trig & lab_thick) == 0


def minimal_separating_collection(mesh, candidates, params):
    """Inclusion-minimal subset of candidates separating {H >= 0.98 h_trig}
    from {H <= h_thick} when their central sub-cylinders are removed."""
    hs = smoothed_H(mesh)
    trig = hs >= 0.98 * params.h_trigger
    if not np.any(trig):
        return []
    thick = hs <= params.h_thick
    masks = [_cut_vertex_set(mesh, cd) for cd in candidates]
    if not _separates(mesh, masks, trig, thick):
        raise SeparationImpossible(
            f"{len(candidates)} candidates cannot separate trigger from thick set"
        )
    # drop worst-quality candidates first, keep the collection minimal
    order = sorted(range(len(candidates)), key=lambda k: (-candidates[k].quality, k))
    active = set(range(len(candidates)))
    for k in order:
        trial = active - {k}
        if _separates(mesh, [masks[j] for j in sorted(trial)], trig, thick):
            active = trial
    return [candidates[k] for k in sorted(active)]


# ------------------------------------------------------- cap replacement


def _split_plane(V, F, wall, tags, plane_point, plane_normal, roi, eps):
    """Split ROI triangles along the plane; returns updated arrays.

    New vertices land exactly on the plane; vertices within eps snap to it.
    """
    V = [v for v in V]
    wall = list(wall)
    F_out = []
    tags_out = []
    side_cache = {}

    def side(i):
        if i not in side_cache:
            d = float((V[i] - plane_point) @ plane_normal)
            if abs(d) < eps:
                d = 0.0
                V[i] = V[i] - ((V[i] - plane_point) @ plane_normal) * plane_normal
            side_cache[i] = d
        return side_cache[i]

    edge_mid = {}

    def midpoint(i, j):
        key = (i, j) if i < j else (j, i)
        if key not in edge_mid:
            di, dj = side(i), side(j)
            t = di / (di - dj)
            p = V[i] + t * (V[j] - V[i])
            p = p - ((p - plane_point) @ plane_normal) * plane_normal
            edge_mid[key] = len(V)
            V.append(p)
            wall.append(bool(wall[i] and wall[j]))
            side_cache[len(V) - 1] = 0.0
        return edge_mid[key]

    for t, tri in enumerate(F):
        if not roi[t]:
            F_out.append(list(tri))
            tags_out.append(tags[t])
            continue
        s = [side(int(v)) for v in tri]
        pos = [k for k in range(3) if s[k] > 0]
        neg = [k for k in range(3) if s[k] < 0]
        if not pos or not neg:
            F_out.append(list(tri))
            tags_out.append(tags[t])
            continue
        if len(pos) == 1 and len(neg) == 1:
            # one vertex on the plane: split into two triangles
            (zero,) = [k for k in range(3) if s[k] == 0.0]
            a, b, c = tri[zero], tri[(zero + 1) % 3], tri[(zero + 2) % 3]
            m = midpoint(int(b), int(c))
            F_out.append([a, b, m])
            tags_out.append(tags[t])
            F_out.append([a, m, c])
            tags_out.append(tags[t])
            continue
        lone = pos[0] if len(pos) == 1 else neg[0]
        a = int(tri[lone])
        b = int(tri[(lone + 1) % 3])
        c = int(tri[(lone + 2) % 3])
        mab = midpoint(a, b)
        mca = midpoint(c, a)
        F_out.append([a, mab, mca])
        tags_out.append(tags[t])
        F_out.append([mab, b, c])
        tags_out.append(tags[t])
        F_out.append([mab, c, mca])
        tags_out.append(tags[t])
    return np.array(V), np.array(F_out, dtype=np.int64), np.array(wall, dtype=bool), np.array(tags_out, dtype=np.int64)


def _boundary_loops_of(F_subset_edges):
    """Chains/loops from an edge soup; open chains are walked both ways."""
    nxt = {}
    for a, b in F_subset_edges:
        nxt.setdefault(int(a), []).append(int(b))
        nxt.setdefault(int(b), []).append(int(a))
    unused = {tuple(sorted(e)) for e in F_subset_edges}

    def walk(start, first):
        chain = [start, first]
        unused.discard(tuple(sorted((start, first))))
        while True:
            cands = [
                c for c in nxt[chain[-1]] if tuple(sorted((chain[-1], c))) in unused
            ]
            if not cands:
                return chain, False
            c = cands[0]
            unused.discard(tuple(sorted((chain[-1], c))))
            if c == chain[0]:
                return chain, True
            chain.append(c)

    loops = []
    while unused:
        a, b = next(iter(unused))
        fwd, closed = walk(a, b)
        if closed:
            loops.append((fwd, True))
            continue
        # extend backward from the starting vertex
        back = [a]
        while True:
            cands = [c for c in nxt[back[-1]] if tuple(sorted((back[-1], c))) in unused]
            if not cands:
                break
            c = cands[0]
            unused.discard(tuple(sorted((back[-1], c))))
            back.append(c)
        chain = list(reversed(back[1:])) + fwd
        loops.append((chain, False))
    return loops


def _zip_open(idx_a, th_a, idx_b, th_b):
    from .primitives import _zip_rings

    return _zip_rings(np.asarray(idx_a), np.asarray(th_a), np.asarray(idx_b), np.asarray(th_b), False)


def _zip_closed(idx_a, th_a, idx_b, th_b):
    from .primitives import _zip_rings

    return _zip_rings(np.asarray(idx_a), np.asarray(th_a), np.asarray(idx_b), np.asarray(th_b), True)


def replace_with_caps(mesh, neck, profile, params, domain, tag_base=1):
    """Cut the neck tube over |axial| <= Gamma r and glue standard caps.

    Returns (mesh, info) where info records the two cap triangle tags
    (tag_base for the +axis side, tag_base+1 for the -axis side) and cap
    quality statistics.  Raises StitchFailure if the cut does not produce
    two clean loops (interior) or two clean wall-to-wall arcs (half neck).
    """
    r = neck.radius
    gam = params.gamma
    c = np.asarray(neck.center)
    axis = unit(np.asarray(neck.axis))
    half = neck.kind == "half"
    nu = None
    if half:
        _, nu = domain.project_to_boundary(c)
        axis = unit(axis - (axis @ nu) * nu)
        chart_need = (gam + 2.5) * r
        if chart_need >= domain.focal_radius():
            raise ChartOverflow("half cap exceeds the boundary chart radius")

    V = mesh.V.copy()
    F = mesh.F.copy()
    wall = mesh.wall.copy()
    tags = np.zeros(len(F), dtype=np.int64)

    rel = V - c
    u_all = rel @ axis
    rho_all = np.linalg.norm(rel - np.outer(u_all, axis), axis=1)
    tube_v = (np.abs(u_all) <= (gam + 1.5) * r) & (rho_all <= 2.6 * r)
    roi = np.any(tube_v[F], axis=1)
    # snap tolerance must absorb wall-projection perturbations of vertices
    # that sit nominally on the cut planes
    eps = 1e-4 * r

    for sgn in (+1.0, -1.0):
        V, F, wall, tags = _split_plane(
            V, F, wall, tags, c + sgn * gam * r * axis, axis, roi, eps
        )
        rel = V - c
        u_all = rel @ axis
        rho_all = np.linalg.norm(rel - np.outer(u_all, axis), axis=1)
        tube_v = (np.abs(u_all) <= (gam + 1.5) * r) & (rho_all <= 2.6 * r)
        roi = np.any(tube_v[F], axis=1)

    # delete the central tube slab
    cent = V[F].mean(axis=1)
    uc = (cent - c) @ axis
    rhoc = np.linalg.norm((cent - c) - np.outer(uc, axis), axis=1)
    kill = (np.abs(uc) < gam * r - 3.0 * eps) & (rhoc <= 2.4 * r)
    keepF = F[~kill]
    keep_tags = tags[~kill]

    # find the freshly cut boundary: edges on the cut planes
    work = SurfaceMesh(V, keepF, wall)
    be = work.boundary_edges()
    uu = (V - c) @ axis
    on_plus = np.abs(np.abs(uu) - gam * r) < 2.0 * eps
    rr = np.linalg.norm((V - c) - np.outer(uu, axis), axis=1)
    near_tube = rr <= 2.4 * r
    cut_edges = [
        e
        for e in be
        if on_plus[e[0]] and on_plus[e[1]] and near_tube[e[0]] and near_tube[e[1]]
    ]
    loops = _boundary_loops_of(np.array(cut_edges)) if cut_edges else []
    want_closed = not half
    loops = [lp for lp in loops if (lp[1] == want_closed) or half]
    if len(loops) != 2:
        raise StitchFailure(f"expected 2 cut loops, found {len(loops)}")

    e1, e2 = orthonormal_basis(axis)
    if half:
        # angles measured from the wall tangent through the inward direction
        e1 = unit(np.cross(nu, axis))
        e2 = nu

    V_list = [v for v in V]
    wall_list = list(wall)
    F_list = [list(t) for t in keepF]
    tag_list = list(keep_tags)
    cap_stats = []

    for loop, closed in loops:
        lpts = V[loop]
        u_loop = float(np.mean((lpts - c) @ axis))
        sgn = 1.0 if u_loop > 0 else -1.0
        inward = -sgn * axis  # cap extends into the removed gap
        th = np.arctan2((lpts - c) @ e2, (lpts - c) @ e1)
        if closed:
            order = np.argsort(th)
            loop_sorted = [loop[i] for i in order]
            th_sorted = th[order]
        else:
            # wall-to-wall arc: order by angle in [0, pi]
            th = np.mod(th, 2 * np.pi)
            order = np.argsort(th)
            loop_sorted = [loop[i] for i in order]
            th_sorted = th[order]
            if th_sorted[0] < -0.2 or th_sorted[-1] > np.pi + 0.2:
                raise StitchFailure("half-neck arc leaves the upper half plane")
        rho_loop = np.linalg.norm(
            (V[loop_sorted] - c) - np.outer((V[loop_sorted] - c) @ axis, axis), axis=1
        )
        h_cap = float(np.median(np.linalg.norm(np.diff(V[loop_sorted], axis=0), axis=1)))
        n_rings = max(6, int(np.ceil(2.0 * r / h_cap)))
        s_stations = np.linspace(2.0, 0.0, n_rings + 1)

        ring_idx = [list(loop_sorted)]
        ring_th = [th_sorted]
        tip_spine = c + u_loop * axis + inward * 2.0 * r
        for s in s_stations[1:]:
            fval = float(profile(s))
            ax_pos = c + u_loop * axis + inward * (2.0 - s) * r
            blend = np.clip((2.0 - s) / 0.6, 0.0, 1.0)
            if fval * r < 0.35 * h_cap or s <= 1e-9:
                break
            n_theta = max(5 if half else 8, int(np.ceil((np.pi if half else 2 * np.pi) * fval * r / h_cap)))
            if half:
                th_new = np.linspace(0.0, np.pi, n_theta)
            else:
                th_new = th_sorted[0] + np.arange(n_theta) * 2 * np.pi / n_theta
            # radius: blend the loop's actual radii into the round profile
            rho_target = fval * (blend * r + (1.0 - blend) * np.interp(
                np.mod(th_new - th_sorted[0], 2 * np.pi) + th_sorted[0],
                th_sorted,
                rho_loop,
                period=None if half else 2 * np.pi,
            ))
            base = len(V_list)
            for k, tt in enumerate(th_new):
                p = ax_pos + rho_target[k] * (np.cos(tt) * e1 + np.sin(tt) * e2)
                is_wall = half and (k == 0 or k == n_theta - 1)
                if is_wall:
                    p, _ = domain.project_to_boundary(p)
                V_list.append(p)
                wall_list.append(bool(is_wall))
            ring_idx.append(list(range(base, base + n_theta)))
            ring_th.append(th_new)
        # apex
        apex = tip_spine.copy()
        if half:
            apex, _ = domain.project_to_boundary(apex)
        V_list.append(apex)
        wall_list.append(bool(half))
        apex_idx = len(V_list) - 1

        tag = tag_base if sgn > 0 else tag_base + 1
        new_tris = []
        for ka in range(len(ring_idx) - 1):
            zip_fn = _zip_open if half else _zip_closed
            new_tris.extend(
                zip_fn(ring_idx[ka], ring_th[ka], ring_idx[ka + 1], ring_th[ka + 1])
            )
        last = ring_idx[-1]
        if half:
            for k in range(len(last) - 1):
                new_tris.append([last[k], last[k + 1], apex_idx])
        else:
            n_last = len(last)
            for k in range(n_last):
                new_tris.append([last[k], last[(k + 1) % n_last], apex_idx])
        # orient the cap outward: away from the spine axis
        fixed = []
        for tri in new_tris:
            p = [np.asarray(V_list[i]) for i in tri]
            n_t = np.cross(p[1] - p[0], p[2] - p[0])
            centroid = (p[0] + p[1] + p[2]) / 3.0
            radial = centroid - (c + ((centroid - c) @ axis) * axis)
            ref = radial + 0.5 * r * inward
            if n_t @ ref < 0:
                tri = [tri[0], tri[2], tri[1]]
            fixed.append(tri)
        F_list.extend(fixed)
        tag_list.extend([tag] * len(fixed))
        cap_stats.append(
            {
                "side": "plus" if sgn > 0 else "minus",
                "rings": len(ring_idx),
                "loop_radius_spread": float(np.ptp(rho_loop) / r),
            }
        )

    out = SurfaceMesh(np.asarray(V_list), np.asarray(F_list, dtype=np.int64), np.asarray(wall_list, dtype=bool))
    out_tags = np.asarray(tag_list, dtype=np.int64)
    used = np.unique(out.F)
    remap = -np.ones(out.n_vertices, dtype=np.int64)
    remap[used] = np.arange(len(used))
    out = SurfaceMesh(out.V[used], remap[out.F], out.wall[used])
    if domain is not None:
        out.snap_wall(domain)
    info = {
        "tags": out_tags,
        "tag_plus": tag_base,
        "tag_minus": tag_base + 1,
        "cap_stats": cap_stats,
        "center": c,
        "radius": r,
        "axis": axis,
    }
    return out, info


# -------------------------------------------------------------- discarding


def discard_components(mesh, params, facing_pairs):
    """Remove components with H > h_neck/10 everywhere; check facing pairs.

    facing_pairs: list of (component of + cap, component of - cap) ids.
    Returns (mesh, discarded summaries, warnings).
    """
    if mesh.H is None:
        mesh.estimate_curvature(quadric=False)
    hs = smoothed_H(mesh)
    labels = mesh.connected_components()
    discard = []
    for s in labels.summaries:
        verts = labels.vertices_of(s["component"])
        if float(hs[verts].min()) > params.h_neck / 10.0:
            discard.append(s["component"])
    warnings = []
    trig_like = hs >= 0.5 * params.h_trigger
    for pair in facing_pairs:
        ca, cb = pair
        gone = (ca in discard) + (cb in discard)
        if ca == cb:
            warnings.append(
                {"kind": "DiscardAmbiguity", "detail": "facing caps share a component"}
            )
            continue
        if gone == 1:
            continue
        if gone == 2:
            continue  # both sides high-curvature; rule already applied
        # neither side discarded: remove the side holding the trigger set
        na = int(np.count_nonzero(trig_like[labels.vertices_of(ca)]))
        nb = int(np.count_nonzero(trig_like[labels.vertices_of(cb)]))
        side = ca if na >= nb else cb
        discard.append(side)
        warnings.append(
            {
                "kind": "DiscardAmbiguity",
                "detail": f"H rule kept both sides; removed component {side}",
            }
        )
    discard = sorted(set(discard))
    summaries = [
        {
            "component": s["component"],
            "min_H": s["min_H"],
            "max_H": s["max_H"],
            "area": s["area"],
        }
        for s in labels.summaries
        if s["component"] in discard
    ]
    keep_mask = ~np.isin(labels.tri_label, discard)
    out = submesh(mesh, keep_mask)
    return out, summaries, warnings


# -------------------------------------------------------------- full pass


def surgery_pass(state, params, domain, profile=None, rng=None, checks=True):
    """Detect, cut, cap, and discard; returns (new state, SurgeryEvent).

    The returned state starts a fresh backward history window.
    """
    from .remesh import curvature_sizing, remesh

    profile = profile or StandardCapProfile()
    rng = rng or np.random.default_rng(0)
    mesh = state.mesh
    if mesh.lam1 is None:
        mesh.estimate_curvature(domain, quadric=True)
    pre = mesh.copy()
    pre_area = pre.area()
    pre_vol = pre.enclosed_volume(domain)

    candidates = detect_necks(state, params, domain)
    # keep radii within a factor two of the coarsest candidate so every
    # executed neck lies in [r_sharp/2, 2 r_sharp]
    if candidates:
        r_big = max(cd.radius for cd in candidates)
        sched = [cd for cd in candidates if cd.radius >= 0.5 * r_big]
    else:
        sched = []
    executed = minimal_separating_collection(mesh, sched, params)
    if not executed:
        raise SeparationImpossible("no separating collection at trigger time")

    radii = np.array([cd.radius for cd in executed])
    r_sharp = float(np.sqrt(radii.min() * radii.max()))
    work = mesh
    facing = []
    infos = []
    for k, cd in enumerate(executed):
        work, info = replace_with_caps(
            work, cd, profile, params, domain, tag_base=2 * k + 1
        )
        infos.append(info)
    sharp = work.copy()
    sharp.estimate_curvature(domain, quadric=False)

    # map cap tags to components for the facing-pair bookkeeping
    labels = sharp.connected_components()
    # tags were lost through vertex compaction; recover via proximity to the
    # expected cap tip positions
    pair_comps = []
    for cd, info in zip(executed, infos):
        comps = []
        for sgn in (+1.0, -1.0):
            tip = cd.center + sgn * params.gamma * cd.radius * cd.axis - sgn * 2.0 * cd.radius * cd.axis
            d, t = sharp.nearest_element(tip[None, :])
            comps.append(int(labels.tri_label[t[0]]))
        pair_comps.append(tuple(comps))

    post, discarded, warnings = discard_components(sharp, params, pair_comps)
    post.estimate_curvature(domain, quadric=True)

    event = SurgeryEvent(
        time=state.time,
        necks=executed,
        discarded=discarded,
        r_sharp=r_sharp,
        pre_area=pre_area,
        post_area=post.area(),
        pre_volume=pre_vol,
        post_volume=post.enclosed_volume(domain) if post.n_triangles else 0.0,
        warnings=warnings,
        cap_stats=[i["cap_stats"] for i in infos],
    )

    if checks:
        _surgery_invariants(pre, sharp, post, executed, params, domain, event, rng)

    # restore mesh quality around the stitches, then start a fresh window
    if post.n_triangles:
        sizing = curvature_sizing(post, base_edge=max(np.median(post.edge_lengths()), 4 * r_sharp))
        post = remesh(post, float(np.median(sizing)), domain=domain, sizing=sizing, iterations=2, strict=False)
        post.estimate_curvature(domain, quadric=True)
    new_state = FlowState(state.time, post, state.history_span, state.initial_area)
    new_state.extinct_log = state.extinct_log
    return new_state, event


def _surgery_invariants(pre, sharp, post, executed, params, domain, event, rng):
    """Containment, separation, radii band, area/volume drop, H ceiling."""
    radii = np.array([cd.radius for cd in executed])
    if not np.all((radii >= event.r_sharp / 2) & (radii <= 2 * event.r_sharp)):
        event.warnings.append({"kind": "RadiiBand", "detail": "neck radii outside [r#/2, 2r#]"})
    for i in range(len(executed)):
        for j in range(i + 1, len(executed)):
            d = np.linalg.norm(executed[i].center - executed[j].center)
            bound = event.r_sharp / (10.0 * params.delta_check)
            if d < bound:
                event.warnings.append(
                    {
                        "kind": "Separation",
                        "detail": f"necks {i},{j} at distance {d:.4g} < {bound:.4g}",
                    }
                )
    # containment: post subset sharp subset pre (sampled)
    for inner, outer, label in ((post, sharp, "post_in_sharp"), (sharp, pre, "sharp_in_pre")):
        if inner.n_triangles == 0:
            continue
        pts = _sample_inside(inner, domain, rng, n=400)
        if pts is None:
            continue
        ok = outer.contains_points(pts, domain)
        frac = float(np.mean(ok))
        event.cap_stats.append({"containment": label, "fraction": frac})
        if frac < 1.0 - 5e-3:
            event.warnings.append(
                {"kind": "Containment", "detail": f"{label} violated at {1-frac:.3%}"}
            )
    # one-sided minimization spot check: surface area inside each surgery
    # ball must not increase
    for cd in executed:
        ball_r = 5.0 * params.gamma * cd.radius
        a_pre = _area_in_ball(pre, cd.center, ball_r)
        a_post = _area_in_ball(post, cd.center, ball_r) if post.n_triangles else 0.0
        event.cap_stats.append(
            {"ball_area_pre": a_pre, "ball_area_post": a_post, "center": cd.as_dict()["center"]}
        )
        if a_post > a_pre * (1.0 + 1e-6):
            event.warnings.append(
                {"kind": "OneSidedArea", "detail": "area grew inside a surgery ball"}
            )
    if event.post_area > event.pre_area or event.post_volume > event.pre_volume:
        event.warnings.append({"kind": "Monotonicity", "detail": "area/volume did not drop"})
    if post.n_triangles:
        h_post = float(smoothed_H(post).max())
        event.cap_stats.append({"post_max_H": h_post})
        if h_post >= params.h_trigger:
            event.warnings.append({"kind": "Retrigger", "detail": f"post max H {h_post:.4g}"})


def _sample_inside(mesh, domain, rng, n=400):
    """Random points inside the region (rejection against containment)."""
    lo = mesh.V.min(axis=0)
    hi = mesh.V.max(axis=0)
    pts = []
    for _ in range(40):
        cand = rng.uniform(lo, hi, size=(4 * n, 3))
        if domain is not None:
            cand = cand[domain.signed_distance(cand) < 0]
        if len(cand) == 0:
            continue
        keep = cand[mesh.contains_points(cand, domain)]
        pts.append(keep)
        if sum(len(p) for p in pts) >= n:
            break
    if not pts:
        return None
    out = np.vstack(pts)
    return out[:n] if len(out) else None


def _area_in_ball(mesh, center, radius):
    cent = mesh.V[mesh.F].mean(axis=1)
    inside = np.linalg.norm(cent - center, axis=1) <= radius
    return float(mesh.triangle_areas()[inside].sum())
