"""Convex ambient domains (ball, ellipsoid) and their geometric queries.

Sign convention: signed distance is negative inside the domain, zero on the
wall, positive outside.  All projections return the nearest wall point and
the inward unit normal there.
"""
import numpy as np

from .errors import DegenerateProjection, RadiusTooLarge
from .geom import orthonormal_basis


class Chart:
    """Invertible map from a half ball in R^3_+ to a wall neighborhood.

    Coordinates (d, u, v): d >= 0 is the distance from the wall, (u, v) are
    tangent-plane offsets at the base point.  forward((0,0,0)) is the base
    point; forward maps {d = 0} into the wall.
    """

    def __init__(self, domain, p, rho):
        p = np.asarray(p, dtype=float)
        if abs(domain.signed_distance(p)) > 1e-9 * domain.diameter:
            raise ValueError("chart base point must lie on the wall")
        if rho >= domain.focal_radius():
            raise RadiusTooLarge(
                f"chart radius {rho} exceeds focal radius {domain.focal_radius()}"
            )
        self.domain = domain
        self.p = p
        self.rho = float(rho)
        self.n_in = domain.inward_normal(p)
        self.e1, self.e2 = orthonormal_basis(self.n_in)

    def forward(self, duv):
        """Map chart coordinates (d, u, v) to ambient points."""
        duv = np.atleast_2d(np.asarray(duv, dtype=float))
        z = self.p + duv[:, 1:2] * self.e1 + duv[:, 2:3] * self.e2
        q, nin = self.domain.project_many(z)
        x = q + duv[:, 0:1] * nin
        return x if duv.shape[0] > 1 else x[0]

    def inverse(self, x):
        """Map ambient points near the base point back to chart coordinates."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        q, nin = self.domain.project_many(x)
        d = -self.domain.signed_distance(x)
        # the tangent-plane preimage lies on the normal line through q
        denom = nin @ self.n_in
        s = ((self.p - q) @ self.n_in) / denom
        z = q + s[:, None] * nin
        u = (z - self.p) @ self.e1
        v = (z - self.p) @ self.e2
        out = np.column_stack([d, u, v])
        return out if x.shape[0] > 1 else out[0]


class ConvexDomain:
    """Base class; see Ball and Ellipsoid."""

    kind = "abstract"

    def signed_distance(self, x):
        raise NotImplementedError

    def project_many(self, x):
        """Vectorized projection: (points, inward normals)."""
        raise NotImplementedError

    def project_to_boundary(self, x):
        """Nearest wall point and inward unit normal for one point."""
        q, n = self.project_many(np.asarray(x, dtype=float)[None, :])
        return q[0], n[0]

    def inward_normal(self, p):
        """Inward unit normal at a wall point."""
        return self.project_to_boundary(np.asarray(p, dtype=float))[1]

    def boundary_chart(self, p, rho):
        return Chart(self, p, rho)

    def reflect(self, x):
        """Mirror points across the wall through their nearest wall point."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        q, _ = self.project_many(x)
        out = 2.0 * q - x
        return out

    def contains(self, x, tol=0.0):
        return self.signed_distance(x) <= tol

    def sample_interior(self, n, rng):
        """n uniform points inside the domain (rejection in the bounding box)."""
        lo, hi = self.bounding_box()
        pts = np.empty((0, 3))
        while len(pts) < n:
            cand = rng.uniform(lo, hi, size=(max(2 * n, 64), 3))
            keep = cand[self.signed_distance(cand) < 0.0]
            pts = np.vstack([pts, keep])
        return pts[:n]

    def focal_radius(self):
        raise NotImplementedError

    def bounding_box(self):
        raise NotImplementedError

    @property
    def diameter(self):
        lo, hi = self.bounding_box()
        return float(np.linalg.norm(hi - lo))

    def volume(self):
        raise NotImplementedError

    def second_form_positive(self):
        """True when the wall's second fundamental form is positive definite."""
        raise NotImplementedError

    def describe(self):
        raise NotImplementedError


class Ball(ConvexDomain):
    kind = "ball"

    def __init__(self, center=(0.0, 0.0, 0.0), radius=1.0):
        if radius <= 0:
            raise ValueError("ball radius must be positive")
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)

    def signed_distance(self, x):
        x = np.asarray(x, dtype=float)
        return np.linalg.norm(x - self.center, axis=-1) - self.radius

    def project_many(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        d = x - self.center
        r = np.linalg.norm(d, axis=1)
        if np.any(r < 1e-14 * self.radius):
            raise DegenerateProjection("cannot project the ball center")
        out = d / r[:, None]
        return self.center + self.radius * out, -out

    def focal_radius(self):
        return self.radius

    def bounding_box(self):
        r = self.radius
        return self.center - r, self.center + r

    def second_form_positive(self):
        return True

    def volume(self):
        return 4.0 * np.pi * self.radius**3 / 3.0

    def cap_flux(self, loop_pts, apex):
        """Exact flux of x over the spherical cap bounded by the loop.

        The cap is the wall patch containing `apex`.  Uses the solid angle
        from the center (exact area) and the loop's vector area.
        """
        c = self.center
        R = self.radius
        p = np.asarray(loop_pts, dtype=float) - c
        q = np.vstack([p[1:], p[:1]])
        apx = np.asarray(apex, dtype=float) - c
        la = np.linalg.norm(p, axis=1)
        lb = np.linalg.norm(q, axis=1)
        lc = np.linalg.norm(apx)
        num = np.einsum("ij,ij->i", p, np.cross(q, apx[None, :].repeat(len(p), 0)))
        den = (
            la * lb * lc
            + np.einsum("ij,ij->i", p, q) * lc
            + (q @ apx) * la
            + (p @ apx) * lb
        )
        omega = 2.0 * np.arctan2(num, den).sum()
        area = abs(omega) * R * R
        vec_area = 0.5 * np.cross(p, q).sum(axis=0)
        if vec_area @ apx < 0:
            vec_area = -vec_area
        return R * area + float(c @ vec_area)


class Ellipsoid(ConvexDomain):
    """Axis-aligned ellipsoid sum((x_i - c_i)^2 / a_i^2) = 1."""

    kind = "ellipsoid"

    def __init__(self, center=(0.0, 0.0, 0.0), semi_axes=(1.0, 1.0, 1.0)):
        self.center = np.asarray(center, dtype=float)
        self.axes = np.asarray(semi_axes, dtype=float)
        if np.any(self.axes <= 0):
            raise ValueError("semi-axes must be positive")

    def _nearest_param(self, y):
        """Solve sum((a_i y_i / (a_i^2 + t))^2) = 1 for t per point.

        y is centered.  The nearest boundary point is q_i = a_i^2 y_i / (a_i^2 + t).
        F(t) is strictly decreasing on (-a_min^2, inf); bisection then Newton.
        """
        a2 = self.axes**2
        ay2 = (self.axes * y) ** 2

        def f(t):
            return np.sum(ay2 / (a2 + t[:, None]) ** 2, axis=1) - 1.0

        n = y.shape[0]
        lo = np.full(n, -np.min(a2) * (1.0 - 1e-12))
        hi = np.maximum(np.linalg.norm(self.axes * y, axis=1) - np.min(a2), 1.0)
        # grow hi until f(hi) < 0
        for _ in range(200):
            bad = f(hi) > 0
            if not np.any(bad):
                break
            hi[bad] = hi[bad] * 2.0 + 1.0
        t = 0.5 * (lo + hi)
        for _ in range(120):
            ft = f(t)
            pos = ft > 0
            lo = np.where(pos, t, lo)
            hi = np.where(pos, hi, t)
            t = 0.5 * (lo + hi)
        return t

    def project_many(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = x - self.center
        if np.any(np.linalg.norm(y, axis=1) < 1e-14 * np.max(self.axes)):
            raise DegenerateProjection("cannot project the ellipsoid center")
        a2 = self.axes**2
        t = self._nearest_param(y)
        q = a2 * y / (a2 + t[:, None])
        n_out = q / a2
        n_out /= np.linalg.norm(n_out, axis=1)[:, None]
        return self.center + q, -n_out

    def signed_distance(self, x):
        x = np.asarray(x, dtype=float)
        flat = np.atleast_2d(x)
        y = flat - self.center
        inside = np.sum((y / self.axes) ** 2, axis=1) < 1.0
        q, _ = self.project_many(flat)
        d = np.linalg.norm(flat - q, axis=1)
        sd = np.where(inside, -d, d)
        return sd if x.ndim > 1 else float(sd[0])

    def focal_radius(self):
        a = np.sort(self.axes)
        return float(a[0] ** 2 / a[2])

    def bounding_box(self):
        return self.center - self.axes, self.center + self.axes

    def second_form_positive(self):
        return True

    def volume(self):
        return 4.0 * np.pi * float(np.prod(self.axes)) / 3.0

    def describe(self):
        return {
            "shape": "ellipsoid",
            "center": self.center.tolist(),
            "semi_axes": self.axes.tolist(),
        }


def make_domain(spec):
    """Build a domain from a config dict like {shape: ball, radius: ..}."""
    shape = spec.get("shape")
    if shape == "ball":
        return Ball(spec.get("center", (0.0, 0.0, 0.0)), spec["radius"])
    if shape == "ellipsoid":
        return Ellipsoid(spec.get("center", (0.0, 0.0, 0.0)), spec["semi_axes"])
    raise ValueError(f"unknown domain shape {shape!r}")
