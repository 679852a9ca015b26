"""Reference solver for rotationally symmetric flows.

A surface of revolution with radius profile r(x, t) moves by mean curvature
according to r_t = r_xx / (1 + r_x^2) - 1/r.  Explicit finite differences
with a curvature-limited step; pinch detection with Richardson extrapolation
over two resolutions.
"""
from dataclasses import dataclass, field

import numpy as np


@dataclass
class AxisymProfile:
    x: np.ndarray  # axial stations (uniform)
    r: np.ndarray  # radii > 0
    bc: str = "tip"  # "tip" (closed ends, r -> 0) | "periodic" | "neumann"

    def copy(self):
        return AxisymProfile(self.x.copy(), self.r.copy(), self.bc)


@dataclass
class PinchReport:
    pinched: bool
    time: float | None
    location: float | None
    extinct: bool = False
    extinct_time: float | None = None


@dataclass
class AxisymResult:
    times: list = field(default_factory=list)
    profiles: list = field(default_factory=list)
    report: PinchReport | None = None

    def profile_at(self, t):
        times = np.array(self.times)
        k = int(np.argmin(np.abs(times - t)))
        return self.times[k], self.profiles[k]

    def min_radius_series(self):
        return np.array(self.times), np.array([p.min() for p in self.profiles])


def _rhs(x, r, bc):
    dx = x[1] - x[0]
    if bc == "periodic":
        rp = np.roll(r, -1)
        rm = np.roll(r, 1)
        rx = (rp - rm) / (2 * dx)
        rxx = (rp - 2 * r + rm) / dx**2
        return rxx / (1.0 + rx**2) - 1.0 / r
    # closed tips: the profile ends where r -> 0; near the ends the surface
    # is a smooth cap, handled by one-sided stencils plus the removal of
    # stations that the cap has consumed (see axisym_flow).
    rx = np.gradient(r, dx)
    rxx = np.empty_like(r)
    rxx[1:-1] = (r[2:] - 2 * r[1:-1] + r[:-2]) / dx**2
    rxx[0] = rxx[1]
    rxx[-1] = rxx[-2]
    out = rxx / (1.0 + rx**2) - 1.0 / r
    if bc == "neumann":
        out[0] = out[1]
        out[-1] = out[-2]
    return out


def axisym_flow(profile, t_end, dt_factor=0.2, pinch_frac=1e-3, frame_interval=None):
    """Evolve the profile; returns AxisymResult with a pinch/extinction report.

    Stops at the first pinch (min r below pinch_frac * initial min r) or when
    the surface is gone (tip boundary: all stations consumed).
    """
    x = profile.x.copy()
    r = profile.r.copy()
    bc = profile.bc
    dx = x[1] - x[0]
    r0_min = float(r.min())
    t = 0.0
    res = AxisymResult()
    res.times.append(t)
    res.profiles.append(r.copy())
    next_frame = frame_interval if frame_interval else np.inf
    active = np.ones(len(x), dtype=bool)

    while t < t_end:
        ra = r[active]
        if len(ra) < 5:
            res.report = PinchReport(False, None, None, extinct=True, extinct_time=t)
            return res
        dt = dt_factor * min(dx**2, float(np.min(ra) ** 2))
        dt = min(dt, t_end - t)
        xa = x[active]
        rhs = _rhs(xa, ra, bc)
        ra_new = ra + dt * rhs
        t += dt
        if bc == "tip":
            # drop stations consumed by the shrinking caps at the ends
            idx = np.flatnonzero(active)
            gone = ra_new <= max(0.25 * dx, 1e-12)
            interior_gone = gone.copy()
            if np.any(gone):
                # allow end stations to disappear (cap recession), but a
                # vanishing interior station is a pinch
                lead = np.argmax(~gone)
                trail = len(gone) - np.argmax(~gone[::-1])
                interior_gone[:lead] = False
                interior_gone[trail:] = False
            if np.any(interior_gone):
                k = idx[np.argmin(np.where(interior_gone, ra_new, np.inf))]
                res.report = PinchReport(True, t, float(x[k]))
                r[active] = np.maximum(ra_new, 1e-12)
                res.times.append(t)
                res.profiles.append(r.copy())
                return res
            if np.any(gone):
                active[idx[gone]] = False
            r[idx] = np.maximum(ra_new, 1e-12)
        else:
            if np.any(ra_new <= pinch_frac * r0_min):
                k = int(np.argmin(ra_new))
                res.report = PinchReport(True, t, float(x[active][k]))
                r[active] = np.maximum(ra_new, 1e-12)
                res.times.append(t)
                res.profiles.append(r.copy())
                return res
            r[active] = ra_new
        if t >= next_frame:
            res.times.append(t)
            res.profiles.append(np.where(active, r, 0.0).copy())
            next_frame += frame_interval
    res.times.append(t)
    res.profiles.append(np.where(active, r, 0.0).copy())
    res.report = PinchReport(False, None, None)
    return res


def pinch_time_richardson(profile_fn, x0, x1, n, t_end, bc="tip"):
    """Pinch time estimates at resolutions n and 2n plus the extrapolant.

    Returns (t_n, t_2n, t_extrapolated).  First-order extrapolation in dx.
    """
    out = []
    for nn in (n, 2 * n):
        x = np.linspace(x0, x1, nn)
        r = np.array([profile_fn(xi) for xi in x])
        if bc == "tip":
            r = np.maximum(r, 1e-12)
        res = axisym_flow(AxisymProfile(x, r, bc), t_end)
        if res.report is None or not res.report.pinched:
            out.append(None)
        else:
            out.append(res.report.time)
    if None in out:
        return out[0], out[1], None
    t_n, t_2n = out
    return t_n, t_2n, t_2n + (t_2n - t_n)


def shrinking_cylinder_radius(r0, t):
    """Exact round-cylinder law r(t) = sqrt(r0^2 - 2 t)."""
    return np.sqrt(np.maximum(r0 * r0 - 2.0 * t, 0.0))


def shrinking_sphere_radius(r0, t):
    """Exact round-sphere law r(t) = sqrt(r0^2 - 4 t)."""
    return np.sqrt(np.maximum(r0 * r0 - 4.0 * t, 0.0))
