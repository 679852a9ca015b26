"""Time-stepping of mean curvature flow with the free boundary constraint.

Semi-implicit scheme: Crank-Nicolson on the cotan Laplacian with a midpoint
operator refresh (two solves per step), then wall vertices are projected back
onto the wall.  The 90-degree contact condition is a consequence of the
projected variational structure; no multipliers are used.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _kernels
from .errors import StepRejected
from .mesh import SurfaceMesh, submesh
from .remesh import curvature_sizing, remesh

DEFAULT_C1 = 0.1
DEFAULT_C2 = 0.05


@dataclass
class FlowControls:
    """Run-control knobs with the documented defaults."""

    c1: float = DEFAULT_C1
    c2: float = DEFAULT_C2
    frame_interval: float = 1e-3
    t_max: float = 1.0
    base_edge: float = 0.06
    sizing_resolve: float = 0.25
    remesh_every: int = 8
    check_every: int = 10
    extinction_area_frac: float = 1e-4
    converge_h: float = 0.02  # max|H| < converge_h / diameter
    converge_rate: float = 1e-3  # displacement per unit time / diameter
    converge_window: int = 10
    trigger_overshoot: float = 0.02
    max_retries: int = 10
    nested_samples: int = 300
    seed: int = 0


@dataclass
class Event:
    kind: str  # "trigger" | "extinct" | "converged" | "timeout"
    time: float
    data: dict = field(default_factory=dict)


class FlowState:
    """Current time slice plus the decimated backward history window."""

    def __init__(self, time, mesh, history_span=0.0, initial_area=None):
        self.time = float(time)
        self.mesh = mesh
        self.history = [(float(time), mesh.copy())]
        self.history_span = float(history_span)
        self.initial_area = initial_area if initial_area is not None else mesh.area()
        self.extinct_log = []

    def push_history(self, keep_spacing=None):
        """Record the current slice; keep the last snapshot per time bucket.

        Buckets of width span/24 cover 1.3x the backward window, so the
        neck detector always finds a slice within one bucket of any
        requested rescaled time at bounded memory (~32 snapshots)."""
        now = (self.time, self.mesh.copy())
        if self.history_span <= 0.0:
            self.history = [self.history[-1], now] if self.history else [now]
            self.history = self.history[-2:]
            return
        spacing = keep_spacing if keep_spacing else self.history_span / 24.0
        if self.history and int(self.history[-1][0] / spacing) == int(
            self.time / spacing
        ):
            self.history[-1] = now
        else:
            self.history.append(now)
        cutoff = self.time - 1.3 * self.history_span
        k0 = 0
        while k0 < len(self.history) - 2 and self.history[k0 + 1][0] <= cutoff:
            k0 += 1
        self.history = self.history[k0:]

    def clear_history(self):
        self.history = [(self.time, self.mesh.copy())]

    def history_depth(self):
        return self.time - self.history[0][0]

    def frame_at(self, t):
        """History slice nearest to time t."""
        times = np.array([h[0] for h in self.history])
        k = int(np.argmin(np.abs(times - t)))
        return self.history[k]


def smoothed_H(mesh):
    """One-ring averaged H; damps single-vertex spikes in event logic."""
    return mesh.smoothed_H()


def adaptive_dt(state, c1=DEFAULT_C1, c2=DEFAULT_C2, frame_interval=None):
    """dt = min(c1 h_min^2, c2 / H_max^2), capped by the frame interval."""
    mesh = state.mesh
    h_min = float(np.min(mesh.edge_lengths()))
    h_max_curv = float(np.max(np.abs(mesh.H))) if mesh.H is not None else 0.0
    dt = c1 * h_min * h_min
    if h_max_curv > 0:
        dt = min(dt, c2 / h_max_curv**2)
    if frame_interval is not None:
        dt = min(dt, frame_interval)
    return dt


def _solve_cn(V, F, rhs_V, dt):
    rows, cols, w, area = _kernels.cotan_weights(V, F)
    n = len(V)
    W = sp.csr_matrix((w, (rows, cols)), shape=(n, n))
    W = W + W.T
    deg = np.asarray(W.sum(axis=1)).ravel()
    L = sp.diags(deg) - W  # positive semidefinite stiffness
    M = sp.diags(area)
    A = (M + 0.5 * dt * L).tocsc()
    B = M @ rhs_V - 0.5 * dt * (L @ rhs_V)
    lu = spla.splu(A)
    return lu.solve(B)


def step(state, dt, domain, controls=None, do_remesh=True):
    """One flow step; raises StepRejected on convexity/containment failure."""
    controls = controls or FlowControls()
    mesh = state.mesh
    if mesh.H is None:
        mesh.estimate_curvature(domain, quadric=False)
    V, F = mesh.V, mesh.F
    x1 = _solve_cn(V, F, V, dt)
    x2 = _solve_cn(0.5 * (V + x1), F, V, dt)

    new = SurfaceMesh(x2, F.copy(), mesh.wall.copy())
    new.snap_wall(domain)
    # interior vertices must not exit the domain
    sd = domain.signed_distance(new.V)
    escaped = sd > 0.0
    if np.any(escaped & ~new.wall):
        q, nin = domain.project_many(new.V[escaped & ~new.wall])
        new.V[escaped & ~new.wall] = q + 1e-12 * domain.diameter * nin
    new.estimate_curvature(domain, quadric=False)

    # mean-convexity monitor (one-sided at the wall, local-scale normalized)
    viol = new.mean_convexity_violation()
    if viol < -0.1:
        raise StepRejected(f"mean-convexity violation {viol:.4g}")
    area_new = new.area()
    if area_new > mesh.area() * (1.0 + 1e-3):
        raise StepRejected("surface area increased")

    out = FlowState(state.time + dt, new, state.history_span, state.initial_area)
    out.history = state.history
    out.extinct_log = state.extinct_log
    out.push_history()
    return out


def maybe_remesh(state, domain, controls):
    """Remesh when edge lengths drift out of the sizing band."""
    mesh = state.mesh
    if mesh.lam1 is None:
        mesh.estimate_curvature(domain, quadric=True)
    sizing = curvature_sizing(mesh, controls.base_edge, controls.sizing_resolve)
    e, _, _ = mesh.edges()
    target = 0.5 * (sizing[e[:, 0]] + sizing[e[:, 1]])
    lens = mesh.edge_lengths()
    frac_bad = float(np.mean((lens > 4.0 / 3.0 * target) | (lens < 0.5 * target)))
    # a pinching neck is a tiny fraction of the mesh: any locally oversized
    # edge must force refinement, not just a global percentage
    any_oversize = bool(np.any(lens > 1.6 * target))
    if (
        not any_oversize
        and frac_bad < 0.04
        and mesh.min_triangle_angle() > np.deg2rad(12.0)
    ):
        return state, False
    new = remesh(
        mesh,
        controls.base_edge,
        domain=domain,
        sizing=sizing,
        iterations=3,
        strict=False,
    )
    new.estimate_curvature(domain, quadric=True)
    out = FlowState(state.time, new, state.history_span, state.initial_area)
    out.history = state.history[:-1] + [(state.time, new.copy())]
    out.extinct_log = state.extinct_log
    return out, True


def drop_extinct_components(state, domain, controls):
    """Remove components below the extinction area threshold (logged)."""
    mesh = state.mesh
    if mesh.H is None:
        mesh.estimate_curvature(domain, quadric=False)
    labels = mesh.connected_components()
    if labels.n_components == 1:
        total = mesh.area()
        if total < controls.extinction_area_frac * state.initial_area:
            state.extinct_log.append(
                {"time": state.time, "area": total, "component": 0}
            )
            state.mesh = submesh(mesh, np.zeros(mesh.n_triangles, dtype=bool))
        return state
    eps_area = controls.extinction_area_frac * state.initial_area
    dead = [s["component"] for s in labels.summaries if s["area"] < eps_area]
    if dead:
        for cid in dead:
            state.extinct_log.append(
                {
                    "time": state.time,
                    "area": labels.summaries[cid]["area"],
                    "component": cid,
                }
            )
        keep_mask = ~np.isin(labels.tri_label, dead)
        state.mesh = submesh(mesh, keep_mask)
        if state.mesh.n_triangles:
            state.mesh.estimate_curvature(domain, quadric=False)
        state.history[-1] = (state.time, state.mesh.copy())
    return state


def run_until_event(state, params, domain, controls=None, on_frame=None):
    """Advance the flow until trigger, extinction, convergence, or timeout.

    params may be None (no surgery trigger, pure smooth flow).  on_frame is
    called at the frame cadence with the current FlowState.
    """
    controls = controls or FlowControls()
    h_trigger = params.h_trigger if params is not None else np.inf
    diam = domain.diameter
    t_frame = state.time
    recent_frames = []
    steps = 0
    if state.mesh.H is None:
        state.mesh.estimate_curvature(domain, quadric=False)
    if on_frame is not None:
        on_frame(state)
    while True:
        if state.mesh.n_triangles == 0:
            return state, Event("extinct", state.time)
        hs = smoothed_H(state.mesh)
        h_max = float(hs.max())
        # trigger with bounded overshoot
        if h_max >= h_trigger:
            vid = int(np.argmax(hs))
            return state, Event(
                "trigger", state.time, {"vertex": vid, "H": h_max}
            )
        if state.time >= controls.t_max:
            return state, Event("timeout", state.time)

        dt = adaptive_dt(state, controls.c1, controls.c2, controls.frame_interval)
        if h_max > 0.7 * h_trigger:
            dt = min(dt, controls.trigger_overshoot * h_trigger / h_max**3)
        dt = min(dt, controls.t_max - state.time)
        next_frame = t_frame + controls.frame_interval
        if state.time < next_frame <= state.time + dt:
            dt = next_frame - state.time

        trial_dt = dt
        last_err = None
        for _ in range(controls.max_retries):
            try:
                new_state = step(state, trial_dt, domain, controls)
                break
            except StepRejected as err:
                last_err = err
                trial_dt *= 0.5
        else:
            raise StepRejected(
                f"step rejected after {controls.max_retries} halvings: {last_err}"
            )
        state = new_state
        steps += 1
        if steps % controls.remesh_every == 0:
            state, _ = maybe_remesh(state, domain, controls)
        state = drop_extinct_components(state, domain, controls)
        if state.mesh.n_triangles == 0:
            return state, Event("extinct", state.time)

        if state.time >= t_frame + controls.frame_interval - 1e-15:
            t_frame = state.time
            if on_frame is not None:
                on_frame(state)
            # convergence bookkeeping over a trailing window of frames
            recent_frames.append((state.time, state.mesh.copy()))
            if len(recent_frames) > controls.converge_window:
                recent_frames.pop(0)
            if len(recent_frames) == controls.converge_window:
                hmax_window = max(
                    float(np.max(np.abs(m.H))) for _, m in recent_frames
                )
                if hmax_window < controls.converge_h / diam:
                    rate = _displacement_rate(recent_frames)
                    if rate < controls.converge_rate * diam:
                        return state, Event("converged", state.time)


def _displacement_rate(frames):
    from .mesh import point_mesh_distance

    (t0, m0), (t1, m1) = frames[0], frames[-1]
    if t1 <= t0:
        return np.inf
    d = point_mesh_distance(m1.V, m0).max()
    return float(d / (t1 - t0))
