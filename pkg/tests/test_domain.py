import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from surgflow.domain import Ball, Ellipsoid, make_domain
from surgflow.errors import DegenerateProjection, RadiusTooLarge

UNIT_BALL = Ball(radius=1.0)


def test_signed_distance_unit_ball():
    assert UNIT_BALL.signed_distance([0.0, 0.0, 0.0]) == pytest.approx(-1.0)
    assert UNIT_BALL.signed_distance([2.0, 0.0, 0.0]) == pytest.approx(1.0)
    assert UNIT_BALL.signed_distance([1.0, 0.0, 0.0]) == pytest.approx(0.0)


def test_projection_unit_ball():
    q, n = UNIT_BALL.project_to_boundary(np.array([0.5, 0.0, 0.0]))
    assert np.allclose(q, [1.0, 0.0, 0.0])
    assert np.allclose(n, [-1.0, 0.0, 0.0])
    q, n = UNIT_BALL.project_to_boundary(np.array([3.0, 0.0, 0.0]))
    assert np.allclose(q, [1.0, 0.0, 0.0])
    assert np.allclose(n, [-1.0, 0.0, 0.0])


def test_projection_ellipsoid_on_axis():
    ell = Ellipsoid(semi_axes=(2.0, 1.0, 1.0))
    q, n = ell.project_to_boundary(np.array([3.0, 0.0, 0.0]))
    assert np.allclose(q, [2.0, 0.0, 0.0], atol=1e-10)
    assert np.allclose(n, [-1.0, 0.0, 0.0], atol=1e-10)


def test_projection_degenerate_center():
    with pytest.raises(DegenerateProjection):
        UNIT_BALL.project_to_boundary(np.zeros(3))


@pytest.mark.parametrize(
    "dom",
    [UNIT_BALL, Ball(center=(0.3, -0.2, 0.1), radius=2.0), Ellipsoid(semi_axes=(2.0, 1.5, 1.0))],
)
def test_projection_idempotent_and_on_wall(dom):
    rng = np.random.default_rng(7)
    pts = dom.sample_interior(50, rng)
    q, _ = dom.project_many(pts)
    assert np.max(np.abs(dom.signed_distance(q))) < 1e-12 * dom.diameter
    q2, _ = dom.project_many(q + 1e-13 * (q - pts))
    assert np.max(np.linalg.norm(q2 - q, axis=1)) < 1e-11


@pytest.mark.parametrize(
    "dom", [UNIT_BALL, Ellipsoid(semi_axes=(2.0, 1.5, 1.0))]
)
def test_sdf_gradient_unit_norm(dom):
    rng = np.random.default_rng(3)
    pts = dom.sample_interior(40, rng)
    h = 1e-5
    grad = np.empty_like(pts)
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        grad[:, k] = (dom.signed_distance(pts + e) - dom.signed_distance(pts - e)) / (2 * h)
    norms = np.linalg.norm(grad, axis=1)
    assert np.max(np.abs(norms - 1.0)) < 1e-6


def test_chart_centers_at_base_point():
    chart = UNIT_BALL.boundary_chart(np.array([1.0, 0.0, 0.0]), 0.5)
    assert np.allclose(chart.forward([0.0, 0.0, 0.0]), [1.0, 0.0, 0.0], atol=1e-12)
    # normal coordinate walks straight toward the center
    assert np.allclose(chart.forward([0.5, 0.0, 0.0]), [0.5, 0.0, 0.0], atol=1e-12)


def test_chart_round_trip_ball():
    chart = UNIT_BALL.boundary_chart(np.array([1.0, 0.0, 0.0]), 0.35)
    rng = np.random.default_rng(11)
    duv = rng.uniform([0.0, -0.2, -0.2], [0.3, 0.2, 0.2], size=(100, 3))
    x = chart.forward(duv)
    back = chart.inverse(x)
    assert np.max(np.abs(back - duv)) < 1e-10


def test_chart_round_trip_ellipsoid():
    ell = Ellipsoid(semi_axes=(2.0, 1.2, 1.0))
    p, _ = ell.project_to_boundary(np.array([2.5, 0.3, 0.2]))
    chart = ell.boundary_chart(p, 0.3)
    rng = np.random.default_rng(5)
    duv = rng.uniform([0.0, -0.15, -0.15], [0.2, 0.15, 0.15], size=(50, 3))
    x = chart.forward(duv)
    back = chart.inverse(x)
    assert np.max(np.abs(back - duv)) < 1e-8


def test_chart_wall_compatibility():
    chart = UNIT_BALL.boundary_chart(np.array([0.0, 1.0, 0.0]), 0.4)
    rng = np.random.default_rng(2)
    uv = rng.uniform(-0.25, 0.25, size=(50, 2))
    x = chart.forward(np.column_stack([np.zeros(50), uv]))
    assert np.max(np.abs(UNIT_BALL.signed_distance(x))) < 1e-12


def test_chart_radius_too_large():
    with pytest.raises(RadiusTooLarge):
        UNIT_BALL.boundary_chart(np.array([1.0, 0.0, 0.0]), 1.5)


def test_reflection_across_wall():
    x = np.array([[0.9, 0.0, 0.0]])
    refl = UNIT_BALL.reflect(x)
    assert np.allclose(refl, [[1.1, 0.0, 0.0]], atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(
    st.floats(-0.8, 0.8), st.floats(-0.8, 0.8), st.floats(-0.8, 0.8),
)
def test_projection_gives_nearest_point(x, y, z):
    p = np.array([x, y, z])
    if np.linalg.norm(p) < 1e-3:
        return
    ell = Ellipsoid(semi_axes=(1.6, 1.3, 1.0))
    q, _ = ell.project_to_boundary(p)
    d = np.linalg.norm(p - q)
    # no sampled wall point may be closer than the reported projection
    th = np.linspace(0, 2 * np.pi, 60)
    ph = np.linspace(0.01, np.pi - 0.01, 30)
    T, P = np.meshgrid(th, ph)
    wall = np.column_stack(
        [
            1.6 * np.cos(T.ravel()) * np.sin(P.ravel()),
            1.3 * np.sin(T.ravel()) * np.sin(P.ravel()),
            1.0 * np.cos(P.ravel()),
        ]
    )
    assert d <= np.min(np.linalg.norm(wall - p, axis=1)) + 1e-6


def test_make_domain():
    d = make_domain({"shape": "ball", "radius": 2.0})
    assert isinstance(d, Ball)
    e = make_domain({"shape": "ellipsoid", "semi_axes": [2, 1, 1]})
    assert isinstance(e, Ellipsoid)
