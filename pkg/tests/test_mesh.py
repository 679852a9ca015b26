import numpy as np
import pytest

from surgflow.domain import Ball
from surgflow.io.ply import read_ply, write_ply
from surgflow.mesh import SurfaceMesh
from surgflow.primitives import (
    capped_cylinder,
    dumbbell_mesh,
    flat_disk,
    icosphere,
    lens_slab,
)


def make_sphere(r=1.0, sub=4):
    V, F = icosphere(radius=r, subdivisions=sub)
    return SurfaceMesh(V, F)


def test_sphere_mean_curvature():
    mesh = make_sphere(1.0, 4).estimate_curvature()
    assert np.max(np.abs(mesh.H - 2.0)) < 0.02
    # outward normals
    assert np.min(np.einsum("ij,ij->i", mesh.normal, mesh.V)) > 0.99


def test_sphere_principal_curvatures():
    mesh = make_sphere(1.0, 4).estimate_curvature()
    assert np.max(np.abs(mesh.lam1 - 1.0)) < 0.02
    assert np.max(np.abs(mesh.lam2 - 1.0)) < 0.02


def test_cylinder_curvatures_mid_tube():
    V, F, _ = capped_cylinder(radius=1.0, half_length=4.0, target_edge=0.12)
    mesh = SurfaceMesh(V, F).estimate_curvature()
    mid = np.abs(V[:, 0]) < 1.5
    assert np.max(np.abs(mesh.H[mid] - 1.0)) < 0.02
    assert np.max(np.abs(mesh.lam1[mid] - 0.0)) < 0.02
    assert np.max(np.abs(mesh.lam2[mid] - 1.0)) < 0.02
    # lam1 direction is the axis direction on a cylinder
    ax = np.abs(mesh.dir1[mid] @ np.array([1.0, 0.0, 0.0]))
    assert np.min(ax) > 0.99


def test_flat_disk_minimal():
    dom = Ball(radius=1.0)
    V, F, bnd = flat_disk(radius=1.0, target_edge=0.08)
    mesh = SurfaceMesh(V, F, wall=bnd).estimate_curvature(dom)
    assert np.max(np.abs(mesh.H)) < 0.02


def hemisphere_on_wall(radius=1.0, target_edge=0.07, wall_R=2000.0):
    """Hemisphere standing on the (locally flat) wall of a huge ball."""
    from surgflow.primitives import revolve

    dom = Ball(center=(0.0, 0.0, -wall_R), radius=wall_R)
    psi = np.linspace(0.0, np.pi / 2, max(4, int(round(radius * np.pi / 2 / target_edge))))
    xs = radius * np.sin(psi)
    rs = radius * np.cos(psi)
    rs[-1] = 0.0
    frame = (
        np.zeros(3),
        np.array([0.0, 0.0, 1.0]),
        np.array([1.0, 0.0, 0.0]),
        np.array([0.0, 1.0, 0.0]),
    )
    V, F, _ = revolve(xs, rs, target_edge, axis_frame=frame, close_start=False)
    mesh = SurfaceMesh(V, F)
    loops = mesh.boundary_loops()
    wall = np.zeros(len(V), dtype=bool)
    for lp in loops:
        wall[lp] = True
    mesh = SurfaceMesh(V, F, wall=wall)
    mesh.snap_wall(dom)
    return mesh, dom


def test_wall_reflection_hemisphere():
    # hemisphere meeting a flat wall orthogonally: H at wall vertices ~ 2/r
    mesh, dom = hemisphere_on_wall()
    mesh.estimate_curvature(dom)
    wall_H = mesh.H[mesh.wall]
    assert np.max(np.abs(wall_H - 2.0)) < 0.1
    # quadric curvatures stay clean across the reflected stencil
    assert np.max(np.abs(mesh.lam1 + mesh.lam2 - 2.0)) < 0.1
    # cotan H is noisier at the pole fan; the bulk must still be tight
    assert np.percentile(np.abs(mesh.H - 2.0), 90) < 0.05


def test_connected_components():
    m1 = make_sphere(1.0, 2)
    lab = m1.estimate_curvature().connected_components()
    assert lab.n_components == 1
    V2, F2 = icosphere(radius=0.5, center=(3.0, 0, 0), subdivisions=3)
    both = SurfaceMesh(
        np.vstack([m1.V, V2]),
        np.vstack([m1.F, F2 + m1.n_vertices]),
    ).estimate_curvature()
    lab = both.connected_components()
    assert lab.n_components == 2
    areas = sorted(s["area"] for s in lab.summaries)
    assert areas[0] == pytest.approx(4 * np.pi * 0.25, rel=0.01)
    assert areas[1] == pytest.approx(4 * np.pi, rel=0.02)
    # summaries match per-vertex recomputation
    for s in lab.summaries:
        verts = lab.vertices_of(s["component"])
        assert s["min_H"] == pytest.approx(float(both.H[verts].min()))


def test_enclosed_volume_sphere():
    mesh = make_sphere(1.0, 4)
    assert mesh.enclosed_volume() == pytest.approx(4 * np.pi / 3, rel=0.005)


def test_enclosed_volume_half_ball():
    mesh, dom = hemisphere_on_wall(target_edge=0.05)
    vol = mesh.enclosed_volume(dom)
    assert vol == pytest.approx(2 * np.pi / 3, rel=0.005)


def test_winding_number_inside_outside():
    mesh = make_sphere(1.0, 3)
    pts = np.array([[0.0, 0.0, 0.0], [0.5, 0.2, 0.1], [2.0, 0.0, 0.0]])
    w = mesh.winding_number(pts)
    assert w[0] == pytest.approx(1.0, abs=1e-6)
    assert w[1] == pytest.approx(1.0, abs=1e-6)
    assert w[2] == pytest.approx(0.0, abs=1e-6)


def test_lam_ordering_and_sum():
    # regular meshes satisfy the estimator-consistency bound at every vertex
    for mesh in (
        make_sphere(0.5, 4),
        make_sphere(2.0, 4),
    ):
        mesh.estimate_curvature()
        assert np.all(mesh.lam1 <= mesh.lam2 + 1e-12)
        diam = 4.0
        tol = 0.05 * np.maximum.reduce(
            [np.abs(mesh.lam1), np.abs(mesh.lam2), np.full(mesh.n_vertices, 1.0 / diam)]
        )
        assert np.all(np.abs(mesh.H - (mesh.lam1 + mesh.lam2)) <= tol)
    # irregular band-transition vertices of raw revolved meshes exceed it;
    # the bulk must still agree
    V, F, _ = dumbbell_mesh(target_edge=0.06)
    mesh = SurfaceMesh(V, F).estimate_curvature()
    assert np.all(mesh.lam1 <= mesh.lam2 + 1e-12)
    tol = 0.05 * np.maximum.reduce(
        [np.abs(mesh.lam1), np.abs(mesh.lam2), np.full(len(V), 0.5)]
    )
    frac_ok = np.mean(np.abs(mesh.H - (mesh.lam1 + mesh.lam2)) <= tol)
    assert frac_ok > 0.75


def test_dumbbell_mean_convex():
    V, F, _ = dumbbell_mesh(bell_radius=0.5, neck_radius=0.1, target_edge=0.035)
    mesh = SurfaceMesh(V, F).estimate_curvature()
    assert mesh.H.min() > 0.0
    assert mesh.check_manifold()


def test_curvature_convergence_order():
    errs = []
    for sub in (3, 4):
        mesh = make_sphere(1.0, sub).estimate_curvature()
        errs.append(np.max(np.abs(mesh.H - 2.0)))
    ratio = errs[0] / errs[1]
    # halving h should at least halve the max error (allow factor 1.5 slack)
    assert ratio > 2.0 / 1.5


def test_lens_slab_structure():
    dom = Ball(radius=1.0)
    V, F, wall = lens_slab(5.0, 0.15, 1.0, 0.08)
    mesh = SurfaceMesh(V, F, wall=wall)
    mesh.snap_wall(dom)
    mesh.estimate_curvature(dom)
    # the initial contact angle is not orthogonal, so convexity is judged
    # one-sided at the wall
    assert mesh.mean_convexity_floor() > 0.0
    assert mesh.connected_components().n_components == 2
    assert len(mesh.boundary_loops()) == 2
    vol = mesh.enclosed_volume(dom)
    assert vol > 0.0


def test_ply_round_trip(tmp_path):
    mesh = make_sphere(1.0, 2).estimate_curvature()
    path = tmp_path / "m.ply"
    write_ply(path, mesh)
    back = read_ply(path)
    assert np.array_equal(back.V, mesh.V)
    assert np.array_equal(back.F, mesh.F)
    assert np.array_equal(back.H, mesh.H)
    assert np.array_equal(back.wall, mesh.wall)
