import numpy as np
import pytest

from surgflow.errors import EmptyTrack
from surgflow.oracles.hausdorff import spacetime_hausdorff


def sphere_cloud(r, n=500, seed=0):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n, 3))
    return r * v / np.linalg.norm(v, axis=1)[:, None]


def sphere_track(r0=1.0, t0=0.0, t1=0.2, dt=0.005, shift=0.0):
    times, clouds = [], []
    t = t0
    while t <= t1 + 1e-12:
        r2 = r0 * r0 - 4.0 * (t - shift)
        if r2 <= 0:
            break
        times.append(t)
        clouds.append(sphere_cloud(np.sqrt(r2), seed=int(1000 * t) + 1))
        t += dt
    return times, clouds


def test_identical_tracks_zero():
    tr = sphere_track()
    assert spacetime_hausdorff(tr, tr) == pytest.approx(0.0, abs=1e-12)


def test_time_shifted_sphere_tracks():
    # same flow shifted by dt in time: distance ~ sqrt(dt) (the time term
    # dominates near extinction where the radius gap blows up)
    dt_shift = 0.01
    a = sphere_track(t0=0.0, t1=0.24, dt=0.002)
    b = sphere_track(t0=dt_shift, t1=0.24, dt=0.002, shift=dt_shift)
    d = spacetime_hausdorff(a, b)
    # compute the expected value: for each (x,t) on track a the best match
    # trades spatial gap |r(t) - r(t - s)| against sqrt(s); near extinction
    # the optimum is s = dt_shift with cost sqrt(dt_shift)
    assert d == pytest.approx(np.sqrt(dt_shift), rel=0.35)
    assert d < 3.0 * np.sqrt(dt_shift)


def test_empty_track_raises():
    with pytest.raises(EmptyTrack):
        spacetime_hausdorff(([], []), sphere_track())


def test_sampling_tolerance():
    # two samplings of the same sphere flow agree up to cloud sampling
    a = sphere_track(dt=0.004)
    b = sphere_track(dt=0.004)
    b = (b[0], [c + 1e-9 for c in b[1]])
    d = spacetime_hausdorff(a, b)
    assert d < 0.12  # cloud sampling gap at n=500 on the unit sphere
