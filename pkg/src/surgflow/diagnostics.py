"""Analytic monitors over spacetime tracks: Gaussian densities, the
reflected truncated density for free boundary flows, relative thickness,
and the canonical-model classifier."""
import numpy as np

from .errors import EmptyIntersection, FrameMissing, InsufficientHistory
from .geom import fibonacci_sphere, orthonormal_basis


def _triangle_quadrature(mesh):
    """3-point midpoint rule per triangle: (points [3m,3], weights [3m])."""
    V, F = mesh.V, mesh.F
    p0, p1, p2 = V[F[:, 0]], V[F[:, 1]], V[F[:, 2]]
    area = 0.5 * np.linalg.norm(np.cross(p1 - p0, p2 - p0), axis=1)
    mids = np.concatenate([(p0 + p1) / 2, (p1 + p2) / 2, (p2 + p0) / 2])
    w = np.concatenate([area, area, area]) / 3.0
    return mids, w


def gaussian_density(track, x0, t0, tau, frame_tol=None):
    """Backward Gaussian density of the track at (x0, t0) on scale tau.

    Integrates (4 pi tau)^-1 exp(-|x-x0|^2 / 4 tau) over the slice at
    t0 - tau.  Equals 1 on a static plane, 4/e on the shrinking sphere at
    its extinction point, sqrt(2 pi / e) on the shrinking cylinder.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    x0 = np.asarray(x0, dtype=float)
    frame_tol = frame_tol if frame_tol is not None else 0.55 * tau
    frame = track.frame_near(t0 - tau, frame_tol)
    pts, w = _triangle_quadrature(frame.mesh)
    d2 = np.sum((pts - x0) ** 2, axis=1)
    kern = np.exp(-d2 / (4.0 * tau)) / (4.0 * np.pi * tau)
    return float(np.sum(kern * w))


def truncated_kernel(x_rel, tau, rho, alpha):
    """Compactly supported backward heat kernel used near the wall."""
    d2 = np.sum(np.atleast_2d(x_rel) ** 2, axis=1)
    gauss = np.exp(-d2 / (4.0 * tau)) / (4.0 * np.pi * tau)
    cutoff = 1.0 - (rho * rho / tau) ** 0.75 * (d2 - alpha * tau) / (rho * rho)
    return gauss * np.maximum(cutoff, 0.0) ** 4


def plane_calibration(tau, rho, alpha=1.0):
    """Exact value of the truncated kernel integrated over a plane through
    the center.  The truncation costs O((tau/rho^2)^(1/4)), far above any
    usable tolerance at numerical scales, so densities are reported relative
    to this planar value (the plane then scores exactly 1)."""
    sig = np.linspace(0.0, 60.0, 40000)
    cut = 1.0 - (rho * rho / tau) ** 0.75 * (4.0 * tau * sig - alpha * tau) / rho**2
    integrand = np.exp(-sig) * np.maximum(cut, 0.0) ** 4
    return float(np.trapezoid(integrand, sig))


def theta_r(track, domain, x0, t0, tau, rho, alpha=1.0, frame_tol=None):
    """Reflected truncated Gaussian density at a wall point.

    Adds the kernel evaluated at the reflection of each surface point across
    the wall, which completes half configurations, and normalizes by the
    exact planar value of the truncated kernel: a half plane meeting the
    wall orthogonally scores 1, a half neck at its own scale scores like
    the full cylinder (> 3/2).
    """
    if not 0.0 < tau < rho * rho:
        raise ValueError("need 0 < tau < rho^2")
    x0 = np.asarray(x0, dtype=float)
    frame_tol = frame_tol if frame_tol is not None else 0.55 * tau
    frame = track.frame_near(t0 - tau, frame_tol)
    pts, w = _triangle_quadrature(frame.mesh)
    support = np.sqrt(alpha * tau + tau**0.75 * rho**0.5) * 1.5 + 2.0
    near = np.sum((pts - x0) ** 2, axis=1) < support**2
    pts, w = pts[near], w[near]
    if len(pts) == 0:
        return 0.0
    refl = domain.reflect(pts)
    val = truncated_kernel(pts - x0, tau, rho, alpha) + truncated_kernel(
        refl - x0, tau, rho, alpha
    )
    return float(np.sum(val * w)) / plane_calibration(tau, rho, alpha)


def relative_thickness(sample, x, r, n_dirs=2000, refine=True):
    """Th(S, x, r): normalized slab thickness of the sample in B(x, r).

    Infimum over directions of the farthest axial reach, approximated on a
    Fibonacci direction set with local refinement; 0 for plane-like data,
    1 for a full ball shell.
    """
    sample = np.atleast_2d(sample)
    x = np.asarray(x, dtype=float)
    rel = sample - x
    inside = np.sum(rel * rel, axis=1) <= r * r
    if not np.any(inside):
        raise EmptyIntersection("no sample points in the ball")
    rel = rel[inside]
    dirs = fibonacci_sphere(n_dirs)
    reach = np.max(np.abs(rel @ dirs.T), axis=0)
    k = int(np.argmin(reach))
    best_dir = dirs[k]
    best = reach[k]
    if refine:
        e1, e2 = orthonormal_basis(best_dir)
        for scale in (0.1, 0.03, 0.01):
            offs = np.array(
                [[0, 0], [1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [-1, -1], [1, -1], [-1, 1]],
                dtype=float,
            )
            cand = best_dir[None, :] + scale * (
                offs[:, 0:1] * e1[None, :] + offs[:, 1:2] * e2[None, :]
            )
            cand /= np.linalg.norm(cand, axis=1)[:, None]
            reach_c = np.max(np.abs(rel @ cand.T), axis=0)
            j = int(np.argmin(reach_c))
            if reach_c[j] < best:
                best = reach_c[j]
                best_dir = cand[j]
    return float(best / r)


# ---------------------------------------------------------------- models


class ModelLibrary:
    """Tabulated local models for the canonical-neighborhood classifier.

    Each model supplies distance(points, tau) -> unsigned distances from
    rescaled-spacetime sample points to the model surface at rescaled
    backward time tau (model normalized to curvature scale H = 1 at tau=0).
    """

    def __init__(self, cap_profile=None, bowl_max_rho=12.0):
        from .surgery import StandardCapProfile

        self.cap_profile = cap_profile or StandardCapProfile()
        self._bowl = _integrate_bowl(bowl_max_rho)
        self.labels = ["cylinder", "sphere", "bowl", "cap"]

    def distance(self, label, pts, tau):
        """pts in model coordinates (axis = z); tau is backward time >= 0."""
        z = pts[:, 2]
        rho = np.hypot(pts[:, 0], pts[:, 1])
        if label == "cylinder":
            # radius 1 at tau=0, growing into the past: r^2 = 1 + 2 tau
            r_t = np.sqrt(max(1.0 + 2.0 * tau, 1e-12))
            return np.abs(rho - r_t)
        if label == "sphere":
            # H = 2/r = 1 at tau=0 -> r0 = 2; backward r^2 = 4 + 4 tau
            r_t = np.sqrt(max(4.0 + 4.0 * tau, 1e-12))
            return np.abs(np.linalg.norm(pts, axis=1) - r_t)
        if label == "bowl":
            # translator moving in +z with speed 1; backward time sits lower
            u = np.interp(rho, self._bowl[0], self._bowl[1])
            slope = np.interp(rho, self._bowl[0], self._bowl[2])
            return np.abs(z - (u - tau)) / np.sqrt(1.0 + slope**2)
        if label == "cap":
            # standard cap at unit tube radius, tip at the origin, treated as
            # quasi-static over the classification window
            f = self.cap_profile(np.clip(z, 0.0, 2.0))
            d_surface = np.abs(rho - f)
            d_tip = np.linalg.norm(pts, axis=1)
            return np.where(z >= 0.0, d_surface, d_tip)
        raise KeyError(label)

    def supports_half(self, label):
        return True


def _integrate_bowl(rho_max, n=4000):
    """Rotationally symmetric translator profile u(rho), speed 1 upward.

    Solves u'' / (1 + u'^2) + u' / rho = 1 with u(0) = u'(0) = 0.
    """
    rho = np.linspace(0.0, rho_max, n)
    h = rho[1] - rho[0]
    u = np.zeros(n)
    up = np.zeros(n)
    for k in range(1, n):
        r = rho[k - 1]
        if r < 1e-12:
            upp = 0.5  # limiting value at the axis: u'' = 1/2
        else:
            upp = (1.0 - up[k - 1] / r) * (1.0 + up[k - 1] ** 2)
        up[k] = up[k - 1] + h * upp
        u[k] = u[k - 1] + h * up[k - 1] + 0.5 * h * h * upp
    return rho, u, up


# ------------------------------------------------------------ classifier


def _align_axis_guess(pts):
    """Smallest-variance direction of a point cloud (cylinder axis guess)."""
    c = pts.mean(axis=0)
    rel = pts - c
    cov = rel.T @ rel / len(pts)
    w, v = np.linalg.eigh(cov)
    return c, v  # columns ordered by increasing variance


def classify_canonical(
    track,
    x0,
    t0,
    models=None,
    domain=None,
    taus=(0.0, 0.5, 1.0),
    ball=2.5,
    max_residual=0.2,
):
    """Best canonical model near (x0, t0) after rescaling to unit curvature.

    Rescales the track by H(x0, t0) about (x0, t0), aligns each model over
    rotations/translations at the sampled rescaled times, and returns
    (label, residual); labels get the "half_" prefix when x0 is within 2/H
    of the wall (matching then runs in reflected coordinates).  Returns
    ("unclassified", residual) when nothing fits within max_residual.
    """
    models = models or ModelLibrary()
    x0 = np.asarray(x0, dtype=float)
    frame0 = track.frame_at(t0)
    mesh0 = frame0.mesh
    if mesh0.H is None:
        mesh0.estimate_curvature(domain, quadric=False)
    d, vid = _nearest_vertex(mesh0, x0)
    H0 = float(mesh0.smoothed_H()[vid])
    if H0 <= 0:
        raise ValueError("nonpositive curvature at the query point")
    scale = H0
    window = max(taus) / scale**2
    half = False
    nu = None
    if domain is not None:
        wall_d = -float(domain.signed_distance(x0))
        if wall_d < 2.0 / H0:
            half = True
            _, nu = domain.project_to_boundary(x0)

    samples = []
    slices = track.sample_history(t0, 1.5 * window + 1e-12)
    if not slices or (t0 - slices[0][0]) < 0.7 * window:
        raise InsufficientHistory(
            f"track history {t0 - slices[0][0] if slices else 0:.3g} shorter than {window:.3g}"
        )
    times = np.array([s[0] for s in slices])
    for tau in taus:
        t_target = t0 - tau / scale**2
        k = int(np.argmin(np.abs(times - t_target)))
        t_s, mesh_s = slices[k]
        pts = mesh_s.V
        if half:
            refl = domain.reflect(pts)
            pts = np.vstack([pts, refl])
        rel = (pts - x0) * scale
        keep = np.linalg.norm(rel, axis=1) <= ball
        if np.count_nonzero(keep) < 10:
            continue
        tau_actual = (t0 - t_s) * scale**2
        samples.append((tau_actual, rel[keep]))
    if not samples:
        raise InsufficientHistory("no usable slices in the rescaled window")

    all_pts = np.vstack([s[1] for s in samples])
    c_guess, axes = _align_axis_guess(all_pts)
    best_label, best_res = "unclassified", np.inf
    for label in models.labels:
        res = _fit_model(models, label, samples, c_guess, axes)
        if res < best_res:
            best_label, best_res = label, res
    if best_res > max_residual:
        return "unclassified", float(best_res)
    return ("half_" + best_label if half else best_label), float(best_res)


def _nearest_vertex(mesh, x0):
    d = np.linalg.norm(mesh.V - x0, axis=1)
    k = int(np.argmin(d))
    return float(d[k]), k


def _kasa_sphere_center(pts):
    """Linear least-squares sphere center (Kasa fit)."""
    A = np.column_stack([2.0 * pts, np.ones(len(pts))])
    b = np.sum(pts * pts, axis=1)
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    return sol[:3]


def _fit_model(models, label, samples, c_guess, axes):
    """RMS point-to-model distance minimized over translation, the axis
    choice, and a bounded scale (the models are self-similar, so the scale
    freedom is the backward-time offset).  Initialization is closed-form
    (Kasa fits / axial extremes); Nelder-Mead only polishes."""
    from scipy.optimize import minimize

    all_pts = np.vstack([s[1] for s in samples])

    def make_cost(R):
        def cost(p):
            off = p[:3]
            sig = float(np.exp(np.clip(p[3], -0.45, 0.45)))
            tot, n = 0.0, 0
            tilt = None
            if R is not None and len(p) >= 6:
                t1 = float(np.clip(p[4], -0.3, 0.3))
                t2 = float(np.clip(p[5], -0.3, 0.3))
                c1, s1 = np.cos(t1), np.sin(t1)
                c2, s2 = np.cos(t2), np.sin(t2)
                rx = np.array([[1, 0, 0], [0, c1, -s1], [0, s1, c1]])
                ry = np.array([[c2, 0, s2], [0, 1, 0], [-s2, 0, c2]])
                tilt = ry @ rx
            for tau, pts in samples:
                local = (pts - off[None, :]) / sig
                if R is not None:
                    local = local @ R.T
                    if tilt is not None:
                        local = local @ tilt.T
                d = models.distance(label, local, tau / sig**2) * sig
                tot += float(np.sum(d * d))
                n += len(d)
            return np.sqrt(tot / max(n, 1))

        return cost

    def _simplex(p0, steps):
        pts = [np.asarray(p0, dtype=float)]
        for k, s in enumerate(steps):
            q = pts[0].copy()
            q[k] += s
            pts.append(q)
        return np.array(pts)

    def polish(cost, p0, steps):
        best = None
        x = np.asarray(p0, dtype=float)
        for _ in range(2):
            out = minimize(
                cost,
                x,
                method="Nelder-Mead",
                options={
                    "maxiter": 400,
                    "xatol": 1e-5,
                    "fatol": 1e-8,
                    "initial_simplex": _simplex(x, steps),
                },
            )
            if best is None or out.fun < best:
                best = float(out.fun)
            x = out.x
            steps = [0.2 * s for s in steps]
        return best

    if label == "sphere":
        p0 = np.concatenate([_kasa_sphere_center(all_pts), [0.0]])
        return polish(make_cost(None), p0, [0.1, 0.1, 0.1, 0.05])
    best = np.inf
    candidates = [axes[:, k] for k in range(3)]
    # axisymmetric tip models have near-degenerate covariance; the third
    # moment (skewness) vector recovers their axis
    rel = all_pts - all_pts.mean(axis=0)
    skew = np.mean(rel * np.sum(rel * rel, axis=1)[:, None], axis=0)
    if np.linalg.norm(skew) > 1e-8:
        candidates.append(skew / np.linalg.norm(skew))
    for a0 in candidates:
        for flip in (1.0, -1.0):
            a = a0 * flip
            R = _frame_rotation(a)
            if label == "cylinder":
                # circle center in the plane orthogonal to the axis
                perp = all_pts - np.outer(all_pts @ a, a)
                c2 = _kasa_sphere_center(perp)
                c2 -= (c2 @ a) * a
                off0 = c2 + np.mean(all_pts @ a) * a
            else:
                # tip models: model origin on the axis at the axial extreme
                u = all_pts @ a
                radial_center = np.mean(all_pts - np.outer(u, a), axis=0)
                off0 = radial_center + u.min() * a
            p0 = np.concatenate([off0, [0.0, 0.0, 0.0]])
            val = polish(
                make_cost(R), p0, [0.1, 0.1, 0.1, 0.05, 0.04, 0.04]
            )
            if val < best:
                best = val
    return best


def _frame_rotation(axis):
    """Rotation taking the model frame (z = axis) to world coordinates."""
    from .geom import unit

    a = unit(np.asarray(axis, dtype=float))
    e1, e2 = orthonormal_basis(a)
    return np.stack([e1, e2, a])
