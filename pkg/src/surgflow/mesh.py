"""Discrete surfaces: curvature estimation, components, volumes, membership.

Curvature conventions: H = lam1 + lam2 (sum of principal curvatures),
positive for the boundary of a convex body with outward normals, so the unit
sphere has H = 2 and the unit cylinder H = 1.
"""
import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _cc

from . import _kernels
from .errors import DegenerateStar, OpenSurface
from .geom import unit

WALL_TOL_FACTOR = 1e-8  # eps_wall = factor * domain diameter


class SurfaceMesh:
    """Triangle mesh with wall-constrained boundary and curvature caches."""

    def __init__(self, V, F, wall=None):
        self.V = np.ascontiguousarray(V, dtype=np.float64)
        self.F = np.ascontiguousarray(F, dtype=np.int64)
        if wall is None:
            wall = np.zeros(len(self.V), dtype=bool)
        self.wall = np.asarray(wall, dtype=bool).copy()
        # caches (filled by estimate_curvature)
        self.H = None
        self.H_raw = None  # one-sided cotan H (no wall reflection)
        self.lam1 = None
        self.lam2 = None
        self.normal = None
        self.dir1 = None  # principal direction of lam1 (neck axis candidates)
        self.vertex_area = None
        self._edges = None
        self._vadj = None

    # ---------------- basic structure ----------------

    def copy(self):
        m = SurfaceMesh(self.V.copy(), self.F.copy(), self.wall.copy())
        for attr in ("H", "H_raw", "lam1", "lam2", "normal", "dir1", "vertex_area"):
            val = getattr(self, attr)
            if val is not None:
                setattr(m, attr, val.copy())
        return m

    @property
    def n_vertices(self):
        return len(self.V)

    @property
    def n_triangles(self):
        return len(self.F)

    def invalidate(self):
        self.H = self.H_raw = self.lam1 = self.lam2 = None
        self.normal = self.dir1 = self.vertex_area = None
        self._edges = None
        self._vadj = None

    def smoothed_H(self):
        """One-ring averaged H; damps single-vertex estimator spikes."""
        adj = self.vertex_adjacency()
        deg = np.asarray(adj.sum(axis=1)).ravel()
        return (self.H + adj @ self.H) / (1.0 + deg)

    def mean_convexity_floor(self):
        """Worst H for the convexity monitor.

        Ring-averaged interior values (raw cotan H carries single-vertex
        noise at junctions and remesh transitions); wall vertices judged by
        the one-sided estimate since the reflected stencil reads any
        contact-angle defect as spurious negative curvature."""
        h = np.where(self.wall, self.H_raw, self.smoothed_H())
        return float(h.min())

    def mean_convexity_violation(self):
        """Worst smoothed H relative to the local curvature scale.

        Values below about -0.1 signal genuine loss of mean-convexity; the
        local normalization keeps estimator noise at a pinch (where |H| is
        orders of magnitude above the median) from tripping the monitor.
        """
        hs = np.where(self.wall, self.H_raw, self.smoothed_H())
        adj = self.vertex_adjacency()
        deg = np.asarray(adj.sum(axis=1)).ravel()
        scale = (np.abs(self.H) + adj @ np.abs(self.H)) / (1.0 + deg)
        med = float(np.median(np.abs(self.H)))
        rel = hs / np.maximum(np.maximum(scale, med), 1e-30)
        return float(rel.min())

    def edges(self):
        """(unique_edges [e,2], edge_tri_count [e], tri_edge_index [m,3])."""
        if self._edges is None:
            F = self.F
            raw = np.vstack([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]])
            raw = np.sort(raw, axis=1)
            uniq, inv, counts = np.unique(
                raw, axis=0, return_inverse=True, return_counts=True
            )
            self._edges = (uniq, counts, inv.reshape(3, -1).T)
        return self._edges

    def vertex_adjacency(self):
        if self._vadj is None:
            e, _, _ = self.edges()
            n = self.n_vertices
            data = np.ones(2 * len(e), dtype=np.int8)
            rows = np.concatenate([e[:, 0], e[:, 1]])
            cols = np.concatenate([e[:, 1], e[:, 0]])
            self._vadj = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
        return self._vadj

    def triangle_areas(self):
        p0, p1, p2 = (self.V[self.F[:, k]] for k in range(3))
        return 0.5 * np.linalg.norm(np.cross(p1 - p0, p2 - p0), axis=1)

    def triangle_normals(self):
        p0, p1, p2 = (self.V[self.F[:, k]] for k in range(3))
        return np.cross(p1 - p0, p2 - p0)

    def area(self):
        return float(np.sum(self.triangle_areas()))

    def edge_lengths(self):
        e, _, _ = self.edges()
        return np.linalg.norm(self.V[e[:, 0]] - self.V[e[:, 1]], axis=1)

    def min_triangle_angle(self):
        p0, p1, p2 = (self.V[self.F[:, k]] for k in range(3))
        angs = []
        for a, b, c in ((p0, p1, p2), (p1, p2, p0), (p2, p0, p1)):
            u, v = unit(b - a), unit(c - a)
            angs.append(np.arccos(np.clip(np.einsum("ij,ij->i", u, v), -1, 1)))
        return float(np.min(angs))

    def check_manifold(self):
        """True when every edge bounds at most two triangles."""
        _, counts, _ = self.edges()
        return bool(np.all(counts <= 2))

    def boundary_edges(self):
        e, counts, _ = self.edges()
        return e[counts == 1]

    def boundary_loops(self):
        """Ordered vertex loops of the mesh boundary."""
        be = self.boundary_edges()
        if len(be) == 0:
            return []
        nxt = {}
        for a, b in be:
            nxt.setdefault(int(a), []).append(int(b))
            nxt.setdefault(int(b), []).append(int(a))
        unused = {tuple(sorted(e)) for e in be.tolist()}
        loops = []
        while unused:
            a, b = sorted(next(iter(unused)))
            loop = [a, b]
            unused.discard((a, b))
            while True:
                cands = [
                    c
                    for c in nxt[loop[-1]]
                    if tuple(sorted((loop[-1], c))) in unused
                ]
                if not cands:
                    break
                c = cands[0]
                unused.discard(tuple(sorted((loop[-1], c))))
                if c == loop[0]:
                    break
                loop.append(c)
            loops.append(loop)
        return loops

    # ---------------- curvature ----------------

    def estimate_curvature(self, domain=None, quadric=True):
        """Fill per-vertex H, lam1 <= lam2, outward normal, and lam1-direction.

        H comes from the cotan mean-curvature vector signed against the
        outward normal; lam1/lam2 from a quadric fit over the 2-ring.  Wall
        vertices use a star reflected across the wall tangent plane, which is
        what the orthogonal-contact condition makes geometrically right.
        quadric=False skips the principal-curvature fits (stepping fast path)
        except the one-sided wall fit backing the convexity monitor.
        """
        V, F = self.V, self.F
        n = len(V)
        rows, cols, w, area = _kernels.cotan_weights(V, F)
        if np.any(area <= 0.0):
            raise DegenerateStar("vertex star with nonpositive area")
        W = sp.csr_matrix((w, (rows, cols)), shape=(n, n))
        W = W + W.T
        deg = np.asarray(W.sum(axis=1)).ravel()
        lap = W @ V - deg[:, None] * V  # = sum_j w_ij (x_j - x_i)

        tn = self.triangle_normals()
        vn_raw = np.zeros((n, 3))
        np.add.at(vn_raw, F[:, 0], tn)
        np.add.at(vn_raw, F[:, 1], tn)
        np.add.at(vn_raw, F[:, 2], tn)
        vn_raw = unit(vn_raw)
        vn = vn_raw.copy()

        wall_idx = np.flatnonzero(self.wall)
        wall_nu = None
        if domain is not None and len(wall_idx) > 0:
            _, nu_in = domain.project_many(V[wall_idx])
            wall_nu = nu_in  # inward wall normal at each wall vertex
            # surface normal at the wall is tangent to the wall
            comp = np.einsum("ij,ij->i", vn[wall_idx], nu_in)
            vn[wall_idx] = unit(vn[wall_idx] - comp[:, None] * nu_in)

        mcv = lap / area[:, None]
        H = -np.einsum("ij,ij->i", mcv, vn)
        self.H_raw = H.copy()

        adj = self.vertex_adjacency()
        two_ring = ((adj + adj @ adj) > 0).tolil().rows

        if wall_nu is not None:
            # reflected half-star: double the laplacian contribution that the
            # mirror copy of the star would add, then halve the doubled area
            refl = lap[wall_idx] - 2.0 * np.einsum(
                "ij,ij->i", lap[wall_idx], wall_nu
            )[:, None] * wall_nu
            mcv_w = (lap[wall_idx] + refl) / (2.0 * area[wall_idx][:, None])
            H[wall_idx] = -np.einsum("ij,ij->i", mcv_w, vn[wall_idx])

        if quadric:
            lam1, lam2, dir1 = self._quadric_curvatures(two_ring, vn, wall_idx, wall_nu)
            self.lam1 = lam1
            self.lam2 = lam2
            self.dir1 = dir1
        else:
            self.lam1 = self.lam2 = self.dir1 = None
        if len(wall_idx) > 0:
            # one-sided mean curvature at the wall: unreflected quadric in the
            # raw normal frame (free of boundary-term and crease artifacts)
            l1w, l2w, _ = self._quadric_curvatures(
                [two_ring[i] for i in wall_idx], vn_raw[wall_idx], wall_idx, None,
                subset=wall_idx,
            )
            self.H_raw[wall_idx] = l1w + l2w
        self.H = H
        self.normal = vn
        self.vertex_area = area
        return self

    def _quadric_curvatures(self, two_ring, vn, wall_idx, wall_nu, subset=None):
        """Batched quadric fits h = a x^2 + b xy + c y^2 + d x + e y.

        With `subset` given, two_ring/vn refer to just those vertices and no
        reflection is applied (one-sided fit).
        """
        V = self.V
        centers = subset if subset is not None else np.arange(len(V))
        n = len(centers)
        refl_map = {}
        if wall_nu is not None:
            for k, vi in enumerate(wall_idx):
                refl_map[int(vi)] = wall_nu[k]

        counts = np.array([len(two_ring[i]) for i in range(n)])
        kmax = int(counts.max()) if n else 0
        kmax_total = 2 * kmax
        P = np.zeros((n, kmax_total, 3))
        M = np.zeros((n, kmax_total), dtype=bool)
        for i in range(n):
            ci = int(centers[i])
            nb = [j for j in two_ring[i] if j != ci]
            pts = V[nb] - V[ci]
            if ci in refl_map:
                nu = refl_map[ci]
                refl_pts = pts - 2.0 * (pts @ nu)[:, None] * nu[None, :]
                pts = np.vstack([pts, refl_pts])
            P[i, : len(pts)] = pts
            M[i, : len(pts)] = True

        k = np.argmin(np.abs(vn), axis=1)
        seed = np.eye(3)[k]
        e1 = seed - np.einsum("ij,ij->i", seed, vn)[:, None] * vn
        e1 /= np.linalg.norm(e1, axis=1)[:, None]
        e2 = np.cross(vn, e1)

        x = np.einsum("nkj,nj->nk", P, e1)
        y = np.einsum("nkj,nj->nk", P, e2)
        z = np.einsum("nkj,nj->nk", P, vn)
        x = np.where(M, x, 0.0)
        y = np.where(M, y, 0.0)
        z = np.where(M, z, 0.0)

        cols = np.stack([x * x, x * y, y * y, x, y], axis=-1)  # (n, k, 5)
        ata = np.einsum("nki,nkj->nij", cols, cols)
        atb = np.einsum("nki,nk->ni", cols, z)
        scale = np.maximum(np.einsum("nii->n", ata), 1e-30)
        ata = ata + (1e-12 * scale)[:, None, None] * np.eye(5)[None, :, :]
        coef = np.linalg.solve(ata, atb[:, :, None])[:, :, 0]
        a, b, c = coef[:, 0], coef[:, 1], coef[:, 2]
        # shape operator eigenvalues of -Hess(h) for an outward-normal frame
        hxx, hxy, hyy = 2 * a, b, 2 * c
        tr = -(hxx + hyy)
        det = hxx * hyy - hxy * hxy
        disc = np.sqrt(np.maximum(tr * tr - 4 * det, 0.0))
        lam1 = 0.5 * (tr - disc)
        lam2 = 0.5 * (tr + disc)
        # eigenvector of -Hess for eigenvalue lam1 (direction of least bending)
        A11, A12, A22 = -hxx, -hxy, -hyy
        v1 = np.where(
            np.abs(A12)[:, None] > 1e-14,
            np.column_stack([lam1 - A22, A12]),
            np.column_stack([np.where(A11 <= A22, 1.0, 0.0), np.where(A11 <= A22, 0.0, 1.0)]),
        )
        v1 = v1 / np.maximum(np.linalg.norm(v1, axis=1), 1e-30)[:, None]
        dir1 = v1[:, 0:1] * e1 + v1[:, 1:2] * e2
        return lam1, lam2, dir1

    # ---------------- components ----------------

    def connected_components(self):
        return ComponentLabeling(self)

    # ---------------- enclosed region ----------------

    def nearest_element(self, points, k=12):
        """(distance, triangle index, closest point) for each query point."""
        from scipy.spatial import cKDTree

        points = np.atleast_2d(points)
        tri = self.V[self.F]
        cent = tri.mean(axis=1)
        kk = min(k, len(cent))
        _, idx = cKDTree(cent).query(points, k=kk)
        if kk == 1:
            idx = idx[:, None]
        best_d = np.full(len(points), np.inf)
        best_t = np.zeros(len(points), dtype=np.int64)
        for j in range(kk):
            d = point_triangle_distance(points, tri[idx[:, j]])
            better = d < best_d
            best_d[better] = d[better]
            best_t[better] = idx[better, j]
        return best_d, best_t

    def region_sign(self, points):
        """-1 for points on the enclosed side of the surface, +1 outside.

        Signs via the outward normal of the nearest surface element; exact
        away from the O(h) neighborhood of the contact circles, where the
        wall band (not the mesh) is the nearest boundary piece.
        """
        points = np.atleast_2d(points)
        d, t = self.nearest_element(points)
        tri = self.V[self.F[t]]
        n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        side = np.einsum("ij,ij->i", points - tri.mean(axis=1), n)
        return np.where(side >= 0.0, 1.0, -1.0)

    def _wall_region_flux(self, domain, refine=3):
        """Flux of x over the wall patches adjacent to the enclosed region.

        Per boundary loop only its SMALL side cap (fan from the projected
        loop centroid) is ever integrated; when the region lies on the big
        side the full-wall flux (= 3 vol(D)) enters once and small caps are
        subtracted.  This covers disks, domes, and band-like patches.
        """
        loops = self.boundary_loops()
        if not loops:
            return 0.0
        eps_wall = max(100.0 * WALL_TOL_FACTOR * domain.diameter, 1e-9)
        flux = 0.0
        need_base = False
        for loop in loops:
            pts = self.V[loop]
            if np.max(np.abs(domain.signed_distance(pts))) > eps_wall:
                raise OpenSurface("boundary loop does not close on the wall")
            near_apex, _ = domain.project_to_boundary(pts.mean(axis=0))
            # probe both wall sides of the loop at a few stations
            k = len(loop)
            stations = [0, k // 4, k // 2, (3 * k) // 4]
            votes = {+1.0: 0, -1.0: 0}
            side_pts = {+1.0: [], -1.0: []}
            for st in stations:
                a, b = pts[st], pts[(st + 1) % k]
                mid = 0.5 * (a + b)
                q, nu_in = domain.project_to_boundary(mid)
                step = np.cross(nu_in, b - a)
                nrm = np.linalg.norm(step)
                if nrm < 1e-30:
                    continue
                step /= nrm
                eps = 1.0 * np.linalg.norm(b - a)
                for sgn in (+1.0, -1.0):
                    s, s_nu = domain.project_to_boundary(q + sgn * eps * step)
                    probe = s + eps * s_nu
                    side_pts[sgn].append(s)
                    if float(self.region_sign(probe[None, :])[0]) < 0.0:
                        votes[sgn] += 1
            if votes[+1.0] == votes[-1.0]:
                raise OpenSurface("cannot identify the wall side of a loop")
            region_sgn = +1.0 if votes[+1.0] > votes[-1.0] else -1.0
            d_region = np.mean(
                [np.linalg.norm(s - near_apex) for s in side_pts[region_sgn]]
            )
            d_other = np.mean(
                [np.linalg.norm(s - near_apex) for s in side_pts[-region_sgn]]
            )
            region_is_small = d_region <= d_other
            if hasattr(domain, "cap_flux"):
                cap = domain.cap_flux(pts, near_apex)
            else:
                cap = self._cap_fan_flux(domain, pts, near_apex, refine)
            if region_is_small:
                flux += cap
            else:
                need_base = True
                flux -= cap
        if need_base:
            flux += 3.0 * domain.volume()
        return flux

    @staticmethod
    def _cap_fan_flux(domain, pts, apex, refine):
        tris = []
        k = len(pts)
        for m in range(k):
            tris.append([pts[m], pts[(m + 1) % k], apex])
        tris = np.array(tris)
        for _ in range(refine):
            mids01 = domain.project_many((tris[:, 0] + tris[:, 1]) / 2)[0]
            mids12 = domain.project_many((tris[:, 1] + tris[:, 2]) / 2)[0]
            mids20 = domain.project_many((tris[:, 2] + tris[:, 0]) / 2)[0]
            tris = np.concatenate(
                [
                    np.stack([tris[:, 0], mids01, mids20], axis=1),
                    np.stack([tris[:, 1], mids12, mids01], axis=1),
                    np.stack([tris[:, 2], mids20, mids12], axis=1),
                    np.stack([mids01, mids12, mids20], axis=1),
                ]
            )
        cent = tris.mean(axis=1)
        nrm = np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0])
        _, nu_in = domain.project_many(cent)
        sgn_fix = np.sign(np.einsum("ij,ij->i", nrm, -nu_in))
        sgn_fix[sgn_fix == 0.0] = 1.0
        return float(np.sum(sgn_fix * np.einsum("ij,ij->i", cent, nrm)) / 2.0)

    def enclosed_volume(self, domain=None):
        """Volume of the region bounded by the mesh and its wall patches."""
        V, F = self.V, self.F
        p0, p1, p2 = V[F[:, 0]], V[F[:, 1]], V[F[:, 2]]
        flux_mesh = float(np.einsum("ij,ij->i", p0, np.cross(p1, p2)).sum() / 6.0)
        if len(self.boundary_edges()) == 0:
            return flux_mesh
        if domain is None:
            raise OpenSurface("open mesh requires a domain for closure")
        return flux_mesh + self._wall_region_flux(domain) / 3.0

    def winding_number(self, points, chunk=2_000_000):
        """Generalized winding number (closed meshes only)."""
        if len(self.boundary_edges()) > 0:
            raise OpenSurface("winding number requires a closed mesh")
        soup = self.V[self.F]
        points = np.atleast_2d(points)
        out = np.zeros(len(points))
        tri_per_chunk = max(1, chunk // max(len(points), 1))
        for s in range(0, len(soup), tri_per_chunk):
            t = soup[s : s + tri_per_chunk]
            a = t[None, :, 0, :] - points[:, None, :]
            b = t[None, :, 1, :] - points[:, None, :]
            c = t[None, :, 2, :] - points[:, None, :]
            la = np.linalg.norm(a, axis=2)
            lb = np.linalg.norm(b, axis=2)
            lc = np.linalg.norm(c, axis=2)
            num = np.einsum("pij,pij->pi", a, np.cross(b, c))
            den = (
                la * lb * lc
                + np.einsum("pij,pij->pi", a, b) * lc
                + np.einsum("pij,pij->pi", b, c) * la
                + np.einsum("pij,pij->pi", c, a) * lb
            )
            out += 2.0 * np.arctan2(num, den).sum(axis=1)
        return out / (4.0 * np.pi)

    def contains_points(self, points, domain=None):
        """Region membership: exact winding for closed meshes, nearest-element
        normal signing for wall-bounded ones."""
        if len(self.boundary_edges()) == 0:
            return self.winding_number(points) > 0.5
        return self.region_sign(points) < 0.0

    # ---------------- wall bookkeeping ----------------

    def snap_wall(self, domain):
        """Project wall vertices back onto the wall."""
        idx = np.flatnonzero(self.wall)
        if len(idx):
            q, _ = domain.project_many(self.V[idx])
            self.V[idx] = q
        return self

    def wall_tolerance(self, domain):
        return WALL_TOL_FACTOR * domain.diameter

    def check_wall(self, domain):
        idx = np.flatnonzero(self.wall)
        if len(idx) == 0:
            return True
        sd = domain.signed_distance(self.V[idx])
        return bool(np.max(np.abs(sd)) < self.wall_tolerance(domain))


class ComponentLabeling:
    """Per-triangle component ids plus per-component summaries."""

    def __init__(self, mesh):
        e, counts, tri_edge = mesh.edges()
        m = mesh.n_triangles
        # adjacency between triangles sharing an edge
        edge_tris = {}
        rows, cols = [], []
        for t in range(m):
            for k in range(3):
                ei = tri_edge[t, k]
                other = edge_tris.get(ei)
                if other is None:
                    edge_tris[ei] = t
                else:
                    rows.append(other)
                    cols.append(t)
        g = sp.csr_matrix(
            (np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(m, m)
        )
        ncomp, labels = _cc(g, directed=False)
        self.mesh = mesh
        self.n_components = int(ncomp)
        self.tri_label = labels
        areas = mesh.triangle_areas()
        H = mesh.H
        self.summaries = []
        be_mask = counts == 1
        for cid in range(ncomp):
            tris = np.flatnonzero(labels == cid)
            verts = np.unique(mesh.F[tris])
            has_wall = bool(
                np.any(be_mask[tri_edge[tris].ravel()])
            )
            summary = {
                "component": cid,
                "n_triangles": int(len(tris)),
                "area": float(areas[tris].sum()),
                "min_H": float(H[verts].min()) if H is not None else None,
                "max_H": float(H[verts].max()) if H is not None else None,
                "has_wall_boundary": has_wall,
            }
            self.summaries.append(summary)

    def vertices_of(self, cid):
        tris = np.flatnonzero(self.tri_label == cid)
        return np.unique(self.mesh.F[tris])

    def extract(self, keep_components):
        """New mesh containing only the listed components."""
        keep = np.isin(self.tri_label, list(keep_components))
        return submesh(self.mesh, keep)


def point_triangle_distance(points, tri, return_closest=False):
    """Exact distances from points[i] to triangle tri[i] (paired arrays)."""
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    ab = b - a
    ac = c - a
    ap = points - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = points - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = points - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2
    denom = np.maximum(va + vb + vc, 1e-300)
    v = np.clip(vb / denom, 0.0, 1.0)
    w = np.clip(vc / denom, 0.0, 1.0)
    closest = a + v[:, None] * ab + w[:, None] * ac
    # region clamps
    m = (d1 <= 0) & (d2 <= 0)
    closest[m] = a[m]
    m = (d3 >= 0) & (d4 <= d3)
    closest[m] = b[m]
    m = (d6 >= 0) & (d5 <= d6)
    closest[m] = c[m]
    m = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    t = np.divide(d1, d1 - d3, out=np.zeros_like(d1), where=(d1 - d3) != 0)
    closest[m] = (a + np.clip(t, 0, 1)[:, None] * ab)[m]
    m = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    t = np.divide(d2, d2 - d6, out=np.zeros_like(d2), where=(d2 - d6) != 0)
    closest[m] = (a + np.clip(t, 0, 1)[:, None] * ac)[m]
    m = (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)
    t = np.divide(
        d4 - d3, (d4 - d3) + (d5 - d6), out=np.zeros_like(d4), where=((d4 - d3) + (d5 - d6)) != 0
    )
    closest[m] = (b + np.clip(t, 0, 1)[:, None] * (c - b))[m]
    dist = np.linalg.norm(points - closest, axis=1)
    if return_closest:
        return dist, closest
    return dist


def point_mesh_distance(points, mesh, k=12):
    """Distance from each point to the mesh surface (exact, KD-accelerated)."""
    from scipy.spatial import cKDTree

    points = np.atleast_2d(points)
    tri = mesh.V[mesh.F]
    cent = tri.mean(axis=1)
    kk = min(k, len(cent))
    _, idx = cKDTree(cent).query(points, k=kk)
    idx = np.atleast_2d(idx.T).T if kk == 1 else idx
    best = np.full(len(points), np.inf)
    for j in range(kk):
        d = point_triangle_distance(points, tri[idx[:, j]])
        best = np.minimum(best, d)
    return best


def closest_point_on_mesh(points, mesh, k=12):
    """Nearest surface point for each query (exact, KD-accelerated)."""
    from scipy.spatial import cKDTree

    points = np.atleast_2d(points)
    tri = mesh.V[mesh.F]
    cent = tri.mean(axis=1)
    kk = min(k, len(cent))
    _, idx = cKDTree(cent).query(points, k=kk)
    idx = np.atleast_2d(idx.T).T if kk == 1 else idx
    best = np.full(len(points), np.inf)
    best_pt = points.copy()
    for j in range(kk):
        d, cp = point_triangle_distance(points, tri[idx[:, j]], return_closest=True)
        better = d < best
        best[better] = d[better]
        best_pt[better] = cp[better]
    return best_pt, best


def submesh(mesh, tri_mask):
    """Mesh restricted to the masked triangles (vertices compacted)."""
    F = mesh.F[tri_mask]
    used = np.unique(F)
    remap = -np.ones(mesh.n_vertices, dtype=np.int64)
    remap[used] = np.arange(len(used))
    out = SurfaceMesh(mesh.V[used], remap[F], mesh.wall[used])
    for attr in ("H", "H_raw", "lam1", "lam2", "vertex_area"):
        val = getattr(mesh, attr)
        if val is not None:
            setattr(out, attr, val[used].copy())
    for attr in ("normal", "dir1"):
        val = getattr(mesh, attr)
        if val is not None:
            setattr(out, attr, val[used].copy())
    return out
