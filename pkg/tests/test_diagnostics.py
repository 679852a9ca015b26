import numpy as np
import pytest

from surgflow.diagnostics import (
    ModelLibrary,
    classify_canonical,
    gaussian_density,
    relative_thickness,
    theta_r,
    truncated_kernel,
)
from surgflow.domain import Ball
from surgflow.errors import EmptyIntersection
from surgflow.mesh import SurfaceMesh
from surgflow.primitives import flat_disk, icosphere, open_cylinder
from surgflow.track import SpacetimeTrack


def track_of(meshes_times):
    tr = SpacetimeTrack()
    for t, m in meshes_times:
        tr.add_frame(t, m, "flow")
    return tr


def test_density_static_plane():
    V, F, _ = flat_disk(radius=4.0, target_edge=0.1)
    plane = SurfaceMesh(V, F)
    tr = track_of([(t, plane) for t in np.linspace(0.0, 0.1, 21)])
    for tau in (0.02, 0.05, 0.1):
        val = gaussian_density(tr, np.zeros(3), 0.1, tau)
        assert val == pytest.approx(1.0, abs=0.01)


def test_density_shrinking_sphere():
    # frames of the exact shrinking sphere; extinction at t0 = 0.25
    times = np.linspace(0.0, 0.2475, 12)
    frames = []
    for t in times:
        r = np.sqrt(1.0 - 4.0 * t)
        V, F = icosphere(radius=r, subdivisions=3)
        frames.append((t, SurfaceMesh(V, F)))
    tr = track_of(frames)
    for tau in (0.05, 0.1):
        val = gaussian_density(tr, np.zeros(3), 0.25, tau, frame_tol=0.03)
        assert val == pytest.approx(4.0 / np.e, abs=0.02)


def test_density_shrinking_cylinder():
    times = np.linspace(0.0, 0.115, 10)
    frames = []
    for t in times:
        r = np.sqrt(0.25 - 2.0 * t)
        V, F, _ = open_cylinder(r, half_length=4.0, target_edge=0.05)
        frames.append((t, SurfaceMesh(V, F)))
    tr = track_of(frames)
    val = gaussian_density(tr, np.zeros(3), 0.125, 0.05, frame_tol=0.02)
    assert val == pytest.approx(np.sqrt(2 * np.pi / np.e), abs=0.02)


def test_density_monotone_on_smooth_flow():
    times = np.linspace(0.0, 0.2, 14)
    frames = []
    for t in times:
        r = np.sqrt(1.0 - 4.0 * t)
        V, F = icosphere(radius=r, subdivisions=3)
        frames.append((t, SurfaceMesh(V, F)))
    tr = track_of(frames)
    taus = [0.04, 0.08, 0.12, 0.16, 0.2]
    vals = [gaussian_density(tr, np.zeros(3), 0.2, tau, frame_tol=0.02) for tau in taus]
    for a, b in zip(vals, vals[1:]):
        assert a <= b + 0.02


def wall_dom(R=2000.0):
    return Ball(center=(0.0, 0.0, -R), radius=R)


def half_plane_mesh():
    # half disk in the plane y = 0 .. no: plane x-z meeting wall z=0: use a
    # big flat disk through the wall normal line, clipped to z <= 0? The
    # wall is z ~ 0 with the domain below; a half plane meeting it
    # orthogonally is {y = 0, z <= 0} locally: mesh as a rectangle strip.
    xs = np.linspace(-4.0, 4.0, 81)
    zs = np.linspace(-4.0, 0.0, 41)
    X, Z = np.meshgrid(xs, zs, indexing="ij")
    V = np.column_stack([X.ravel(), np.zeros(X.size), Z.ravel()])
    F = []
    nx, nz = len(xs), len(zs)
    for i in range(nx - 1):
        for j in range(nz - 1):
            a = i * nz + j
            b = (i + 1) * nz + j
            F += [[a, b, a + 1], [b, b + 1, a + 1]]
    wall = np.zeros(len(V), dtype=bool)
    wall[Z.ravel() > -1e-9] = True
    return SurfaceMesh(V, np.array(F, dtype=np.int64), wall)


def test_theta_r_half_plane():
    dom = wall_dom()
    mesh = half_plane_mesh()
    tr = track_of([(t, mesh) for t in np.linspace(0.0, 0.1, 21)])
    x0 = np.array([0.0, 0.0, 0.0])
    val = theta_r(tr, dom, x0, 0.1, tau=0.02, rho=1.5, alpha=1.0)
    assert val == pytest.approx(1.0, abs=0.02)


def test_theta_r_half_cylinder_exceeds_three_halves():
    # half neck measured at its own parabolic scale: center the density at
    # the virtual pinch time of the shrinking half cylinder; the reflection
    # completes the full cylinder, whose self-similar value is
    # sqrt(2 pi / e) ~ 1.52 > 3/2 once the truncation coefficient
    # (2 r^2)^(1/4) / sqrt(rho) is small
    dom = wall_dom()
    r0 = 0.02
    frame = (
        np.zeros(3),
        np.array([1.0, 0.0, 0.0]),
        np.array([0.0, 1.0, 0.0]),
        np.array([0.0, 0.0, 1.0]),
    )
    times = np.linspace(-5.0 * r0**2, 0.0, 16)
    frames = []
    for t in times:
        r = np.sqrt(r0**2 - 2.0 * t)
        V, F, seam = open_cylinder(
            r, half_length=0.6, target_edge=0.08 * r0, axis_frame=frame, angle=(np.pi, 2 * np.pi)
        )
        m = SurfaceMesh(V, F, wall=seam)
        m.snap_wall(dom)
        frames.append((t, m))
    tr = track_of(frames)
    x0, _ = dom.project_to_boundary(np.array([0.0, 0.0, -1e-6]))
    t_pinch = r0**2 / 2.0
    val = theta_r(tr, dom, x0, t_pinch, tau=2.0 * r0**2, rho=500.0, alpha=1.0)
    assert val > 1.5


def test_theta_r_monotone_smoke():
    dom = wall_dom()
    mesh = half_plane_mesh()
    tr = track_of([(t, mesh) for t in np.linspace(0.0, 0.1, 21)])
    x0 = np.zeros(3)
    taus = [0.01, 0.03, 0.06, 0.09]
    vals = [theta_r(tr, dom, x0, 0.1, tau, rho=1.5) for tau in taus]
    for a, b in zip(vals, vals[1:]):
        assert a <= b + 0.02


def test_thickness_plane():
    rng = np.random.default_rng(0)
    pts = np.column_stack([rng.uniform(-1, 1, 4000), rng.uniform(-1, 1, 4000), np.zeros(4000)])
    th = relative_thickness(pts, np.zeros(3), 1.0)
    assert th == pytest.approx(0.0, abs=0.01)


def test_thickness_sphere():
    V, F = icosphere(radius=1.0, subdivisions=4)
    th = relative_thickness(V, np.zeros(3), 1.0)
    assert th == pytest.approx(1.0, abs=0.02)


def test_thickness_cylinder():
    a, r = 0.1, 1.0
    V, F, _ = open_cylinder(a, half_length=1.5, target_edge=0.02)
    th = relative_thickness(V, np.zeros(3), r)
    # brute-force reference on the same direction set
    assert th == pytest.approx(a / r, abs=0.02)


def test_thickness_scale_invariance():
    V, F = icosphere(radius=0.7, subdivisions=3)
    th1 = relative_thickness(V, np.zeros(3), 1.0)
    th2 = relative_thickness(3.0 * V, np.zeros(3), 3.0)
    assert th1 == pytest.approx(th2, abs=1e-12)


def test_thickness_empty():
    with pytest.raises(EmptyIntersection):
        relative_thickness(np.array([[5.0, 0, 0]]), np.zeros(3), 1.0)


# ------------------------------------------------------------- classifier


def test_classify_sphere_track():
    times = np.linspace(0.0, 0.22, 14)
    frames = []
    for t in times:
        r = np.sqrt(1.0 - 4.0 * t)
        V, F = icosphere(radius=r, subdivisions=3)
        frames.append((t, SurfaceMesh(V, F)))
    tr = track_of(frames)
    t0 = 0.22
    r0 = np.sqrt(1.0 - 4 * t0)
    x0 = np.array([r0, 0.0, 0.0])
    label, res = classify_canonical(tr, x0, t0)
    assert label == "sphere"
    assert res < 0.05


def test_classify_cylinder_track():
    times = np.linspace(0.0, 0.115, 16)
    frames = []
    for t in times:
        r = np.sqrt(0.25 - 2.0 * t)
        V, F, _ = open_cylinder(r, half_length=3.0, target_edge=0.04)
        frames.append((t, SurfaceMesh(V, F)))
    tr = track_of(frames)
    t0 = 0.115
    r_now = np.sqrt(0.25 - 2 * t0)
    x0 = np.array([0.0, r_now, 0.0])
    label, res = classify_canonical(tr, x0, t0)
    assert label == "cylinder"
    assert res < 0.05


def test_classifier_self_test_models():
    # sampled model surfaces classify as themselves with tiny residual
    lib = ModelLibrary()
    rng = np.random.default_rng(1)

    def sample_cyl(tau):
        r = np.sqrt(1.0 + 2.0 * tau)
        th = rng.uniform(0, 2 * np.pi, 400)
        z = rng.uniform(-2.2, 2.2, 400)
        return np.column_stack([r * np.cos(th), r * np.sin(th), z])

    def sample_sph(tau):
        r = np.sqrt(4.0 + 4.0 * tau)
        v = rng.normal(size=(400, 3))
        return r * v / np.linalg.norm(v, axis=1)[:, None]

    def sample_bowl(tau):
        rr, uu, _ = lib._bowl
        rho = rng.uniform(0, 2.5, 400)
        th = rng.uniform(0, 2 * np.pi, 400)
        z = np.interp(rho, rr, uu) - tau
        return np.column_stack([rho * np.cos(th), rho * np.sin(th), z])

    def sample_cap(tau):
        z = rng.uniform(0.0, 2.4, 400)
        f = lib.cap_profile(np.clip(z, 0, 2))
        th = rng.uniform(0, 2 * np.pi, 400)
        return np.column_stack([f * np.cos(th), f * np.sin(th), z])

    from surgflow.diagnostics import _align_axis_guess, _fit_model

    for label, sampler in (
        ("cylinder", sample_cyl),
        ("sphere", sample_sph),
        ("bowl", sample_bowl),
        ("cap", sample_cap),
    ):
        samples = [(tau, sampler(tau)) for tau in (0.0, 0.25, 0.5)]
        allp = np.vstack([s[1] for s in samples])
        c, axes = _align_axis_guess(allp)
        results = {
            lb: _fit_model(lib, lb, samples, c, axes) for lb in lib.labels
        }
        best = min(results, key=results.get)
        assert best == label, f"{label} classified as {best}: {results}"
        assert results[label] < 0.02
