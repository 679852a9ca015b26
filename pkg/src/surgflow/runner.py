"""Run orchestration: flow to events, surgery passes, track recording."""
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalAbort, SeparationImpossible, StepRejected
from .flow import FlowControls, FlowState, run_until_event, smoothed_H
from .surgery import StandardCapProfile, surgery_pass
from .track import SpacetimeTrack


@dataclass
class RunResult:
    track: SpacetimeTrack
    termination: str  # "extinct" | "converged" | "timeout" | "aborted"
    end_time: float
    surgery_events: list = field(default_factory=list)
    extinct_components: list = field(default_factory=list)
    diagnostics_rows: list = field(default_factory=list)
    error: str | None = None


def history_span_for(params):
    """Backward window required by the strong-neck check (with margin)."""
    if params is None:
        return 0.0
    return 2.0 / params.h_neck**2


def run_flow_with_surgery(
    mesh,
    domain,
    params,
    controls=None,
    profile=None,
    max_surgeries=20,
    rng_seed=0,
):
    """Evolve the region until extinction/convergence/timeout with surgery.

    Returns a RunResult whose track holds flow frames at the configured
    cadence and (pre, sharp, post) triples at surgery times.
    """
    controls = controls or FlowControls()
    profile = profile or StandardCapProfile()
    rng = np.random.default_rng(rng_seed)
    track = SpacetimeTrack()
    rows = []

    if mesh.H is None or mesh.lam1 is None:
        mesh.estimate_curvature(domain, quadric=True)
    state = FlowState(0.0, mesh, history_span=history_span_for(params))

    def on_frame(st):
        m = st.mesh
        if m.n_triangles == 0:
            return
        if m.lam1 is None:
            m.estimate_curvature(domain, quadric=True)
        track.add_frame(st.time, m, "flow")
        absA = np.sqrt(m.lam1**2 + m.lam2**2)
        ratio = absA / np.maximum(m.H, 1e-30)
        rows.append(
            {
                "time": st.time,
                "area": m.area(),
                "volume": m.enclosed_volume(domain),
                "H_min": float(m.H.min()),
                "H_max": float(m.H.max()),
                "max_A_over_H": float(ratio.max()),
            }
        )

    surgeries = []
    termination = "timeout"
    end_time = 0.0
    error = None
    for _ in range(max_surgeries + 1):
        try:
            state, event = run_until_event(state, params, domain, controls, on_frame)
        except (StepRejected, NumericalAbort) as err:
            termination, error = "aborted", str(err)
            end_time = state.time
            break
        end_time = event.time
        if event.kind != "trigger":
            termination = event.kind
            break
        # record the presurgery slice and its backward window
        pre_mesh = state.mesh.copy()
        if pre_mesh.lam1 is None:
            pre_mesh.estimate_curvature(domain, quadric=True)
        track.add_frame(state.time, pre_mesh, "pre")
        history = [(t, m) for t, m in state.history]
        try:
            state, surg = surgery_pass(state, params, domain, profile, rng)
        except (SeparationImpossible, NumericalAbort) as err:
            termination, error = "aborted", str(err)
            break
        track.add_event(surg.as_dict(), history=history)
        surgeries.append(surg)
        sharp_like = state.mesh  # post-discard, post-remesh state
        track.add_frame(state.time, sharp_like, "post")
        if state.mesh.n_triangles == 0:
            termination = "extinct"
            break
    else:
        termination, error = "aborted", "surgery budget exhausted"

    result = RunResult(
        track=track,
        termination=termination,
        end_time=end_time,
        surgery_events=surgeries,
        extinct_components=list(state.extinct_log),
        diagnostics_rows=rows,
        error=error,
    )
    return result


def longtime_report(result, domain, controls=None, thin_fraction=0.05):
    """Terminal-state summary: extinction data or converged component table.

    Converged components report max |H|, the free-boundary flag, and a sheet
    multiplicity estimate (2 when the enclosed region is thin relative to
    its extent -- two-sheeted collapse onto a midsurface).
    """
    from .errors import RunNotFinished

    controls = controls or FlowControls()
    if result.termination == "extinct":
        return {
            "termination": "extinct",
            "extinction_time": result.end_time,
            "surgeries": len(result.surgery_events),
            "last_components": result.extinct_components[-3:],
        }
    if result.termination != "converged":
        raise RunNotFinished(f"run ended with {result.termination}")
    frames = result.track.closed_frames()
    mesh = frames[-1].mesh
    labels = mesh.connected_components()
    comps = []
    for s in labels.summaries:
        verts = labels.vertices_of(s["component"])
        sub = labels.extract([s["component"]])
        extent = float(np.max(sub.V.max(axis=0) - sub.V.min(axis=0)))
        thickness = _region_thickness(sub, domain)
        comps.append(
            {
                "component": s["component"],
                "max_abs_H": float(np.max(np.abs(mesh.H[verts]))),
                "free_boundary": bool(s["has_wall_boundary"]),
                "sheets": 2 if thickness < thin_fraction * max(extent, 1e-30) else 1,
                "thickness": thickness,
                "area": s["area"],
            }
        )
    return {
        "termination": "converged",
        "time": result.end_time,
        "surgeries": len(result.surgery_events),
        "components": comps,
    }


def _region_thickness(mesh, domain):
    """Max thickness of the enclosed region: twice the largest distance from
    an inside sample to the surface."""
    rng = np.random.default_rng(1)
    lo = mesh.V.min(axis=0)
    hi = mesh.V.max(axis=0)
    pts = rng.uniform(lo, hi, size=(4000, 3))
    if domain is not None:
        pts = pts[domain.signed_distance(pts) < 0]
    inside = pts[mesh.contains_points(pts, domain)]
    if len(inside) == 0:
        return 0.0
    from .mesh import point_mesh_distance

    return 2.0 * float(point_mesh_distance(inside, mesh).max())
