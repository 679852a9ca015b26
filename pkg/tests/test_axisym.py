import numpy as np
import pytest

from surgflow.oracles.axisym import (
    AxisymProfile,
    axisym_flow,
    pinch_time_richardson,
)
from surgflow.primitives import dumbbell_profile


def test_cylinder_exact_pinch():
    # constant radius 0.5, periodic: r(t) = sqrt(0.25 - 2t), pinch at 0.125
    x = np.linspace(0.0, 1.0, 200, endpoint=False)
    prof = AxisymProfile(x, np.full_like(x, 0.5), bc="periodic")
    res = axisym_flow(prof, 0.2)
    assert res.report.pinched
    assert res.report.time == pytest.approx(0.125, rel=0.01)


def test_cylinder_radius_law():
    x = np.linspace(0.0, 1.0, 128, endpoint=False)
    prof = AxisymProfile(x, np.full_like(x, 0.5), bc="periodic")
    res = axisym_flow(prof, 0.1, frame_interval=0.01)
    t, rmin = res.min_radius_series()
    exact = np.sqrt(0.25 - 2 * t)
    assert np.max(np.abs(rmin - exact)) < 0.002


def test_sphere_extinction():
    # semicircle profile: the round sphere, extinct at r0^2/4 = 0.25
    def fn(x):
        return np.sqrt(max(1.0 - x * x, 1e-24))

    x = np.linspace(-1.0, 1.0, 400)
    r = np.array([fn(xi) for xi in x])
    res = axisym_flow(AxisymProfile(x, r, bc="tip"), 0.4)
    assert res.report.extinct
    assert res.report.extinct_time == pytest.approx(0.25, rel=0.01)


def test_dumbbell_pinches_at_waist():
    fn, x_tip = dumbbell_profile(bell_radius=0.5, neck_radius=0.1)
    t_n, t_2n, t_extrap = pinch_time_richardson(fn, -x_tip, x_tip, 400, 0.1)
    assert t_2n is not None
    x = np.linspace(-x_tip, x_tip, 800)
    r = np.array([fn(xi) for xi in x])
    res = axisym_flow(AxisymProfile(x, np.maximum(r, 1e-12), bc="tip"), 0.1)
    assert res.report.pinched
    assert abs(res.report.location) < 0.05  # symmetric waist
    # pinch happens long before the bells disappear
    assert res.report.time < 0.03


def test_richardson_convergence():
    fn, x_tip = dumbbell_profile(bell_radius=0.5, neck_radius=0.1)
    t1, t2, tex = pinch_time_richardson(fn, -x_tip, x_tip, 300, 0.1)
    t2b, t4, tex2 = pinch_time_richardson(fn, -x_tip, x_tip, 600, 0.1)
    assert tex is not None and tex2 is not None
    # successive-resolution differences shrink by at least 1.5
    d1 = abs(t2 - t1)
    d2 = abs(t4 - t2b)
    assert d1 / max(d2, 1e-12) > 1.5
    # extrapolants agree tightly
    assert tex == pytest.approx(tex2, rel=0.01)
