"""Spacetime Hausdorff distance between tracks of point clouds.

The spacetime metric is max(|x - x'|, sqrt|t - t'|), the parabolic-compatible
choice: a time offset tau costs sqrt(tau), matching the scaling of the flow.
"""
import numpy as np
from scipy.spatial import cKDTree

from ..errors import EmptyTrack


def _as_cloud_track(track, t_end=None):
    """(times, clouds) from a SpacetimeTrack, LevelSetTrack, or raw pair."""
    if hasattr(track, "clouds") and callable(track.clouds):
        times, clouds = track.clouds(t_end)
    elif hasattr(track, "clouds"):
        times, clouds = list(track.times), list(track.clouds)
    else:
        times, clouds = track
    keep_t, keep_c = [], []
    for t, c in zip(times, clouds):
        if t_end is not None and t > t_end + 1e-12:
            continue
        if len(c):
            keep_t.append(float(t))
            keep_c.append(np.asarray(c))
    if not keep_t:
        raise EmptyTrack("no nonempty frames in range")
    return keep_t, keep_c


def directed_spacetime_distance(track_a, track_b, t_end=None):
    """sup over a in A of inf over b in B of the spacetime metric."""
    ta, ca = _as_cloud_track(track_a, t_end)
    tb, cb = _as_cloud_track(track_b, t_end)
    trees = [cKDTree(c) for c in cb]
    tb = np.array(tb)
    worst = 0.0
    for t, cloud in zip(ta, ca):
        best = np.full(len(cloud), np.inf)
        order = np.argsort(np.abs(tb - t))
        for j in order:
            tcost = np.sqrt(abs(tb[j] - t))
            if tcost >= best.max():
                break
            d = trees[j].query(cloud, workers=-1)[0]
            cand = np.maximum(d, tcost)
            best = np.minimum(best, cand)
        worst = max(worst, float(best.max()))
    return worst


def spacetime_hausdorff(track_a, track_b, t_end=None):
    """Symmetric spacetime Hausdorff distance of two tracks."""
    return max(
        directed_spacetime_distance(track_a, track_b, t_end),
        directed_spacetime_distance(track_b, track_a, t_end),
    )


def slice_distances(track_a, track_b, t_end=None):
    """Per-time spatial Hausdorff between nearest frames (diagnostic)."""
    ta, ca = _as_cloud_track(track_a, t_end)
    tb, cb = _as_cloud_track(track_b, t_end)
    tb_arr = np.array(tb)
    out = []
    for t, cloud in zip(ta, ca):
        j = int(np.argmin(np.abs(tb_arr - t)))
        d_ab = cKDTree(cb[j]).query(cloud, workers=-1)[0].max()
        d_ba = cKDTree(cloud).query(cb[j], workers=-1)[0].max()
        out.append((t, float(max(d_ab, d_ba))))
    return out
