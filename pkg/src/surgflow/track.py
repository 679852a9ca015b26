"""Spacetime track: time-stamped mesh frames, surgery triples, event log.

At a surgery time the track stores the presurgery slice (kind "pre"), the
capped slice ("sharp"), and the post-discard slice ("post"); the closed
track convention treats the presurgery slice as the frame at that time.
Fine-grained presurgery history (the detector's backward window) is attached
per event so diagnostics can rescale around high-curvature points.
"""
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .io.ply import read_ply, write_ply


@dataclass
class Frame:
    time: float
    mesh: object
    kind: str = "flow"  # flow | pre | sharp | post


@dataclass
class SpacetimeTrack:
    frames: list = field(default_factory=list)
    events: list = field(default_factory=list)
    histories: dict = field(default_factory=dict)  # event index -> [(t, mesh)]

    def add_frame(self, time, mesh, kind="flow"):
        self.frames.append(Frame(float(time), mesh.copy(), kind))

    def add_event(self, event, history=None):
        self.events.append(event)
        if history is not None:
            self.histories[len(self.events) - 1] = [
                (float(t), m.copy()) for t, m in history
            ]

    def times(self, kinds=("flow", "pre")):
        return np.array([f.time for f in self.frames if f.kind in kinds])

    def closed_frames(self):
        """Frames of the closed spacetime track (presurgery convention)."""
        return [f for f in self.frames if f.kind in ("flow", "pre")]

    def frame_at(self, t, kinds=("flow", "pre")):
        frames = [f for f in self.frames if f.kind in kinds]
        if not frames:
            raise ValueError("track has no frames")
        times = np.array([f.time for f in frames])
        return frames[int(np.argmin(np.abs(times - t)))]

    def frame_near(self, t, tol, kinds=("flow", "pre")):
        f = self.frame_at(t, kinds)
        if abs(f.time - t) > tol:
            from .errors import FrameMissing

            raise FrameMissing(f"no frame within {tol} of t={t}")
        return f

    def sample_history(self, t0, window):
        """All (time, mesh) slices in [t0 - window, t0]: frames plus any
        event histories overlapping the window."""
        out = [(f.time, f.mesh) for f in self.closed_frames() if t0 - window <= f.time <= t0 + 1e-12]
        for hist in self.histories.values():
            out.extend(
                (t, m) for t, m in hist if t0 - window <= t <= t0 + 1e-12
            )
        out.sort(key=lambda x: x[0])
        dedup = []
        for t, m in out:
            if not dedup or t - dedup[-1][0] > 1e-14:
                dedup.append((t, m))
        return dedup

    def clouds(self, t_end=None):
        """(times, point clouds) of the closed track."""
        ts, cs = [], []
        for f in self.closed_frames():
            if t_end is not None and f.time > t_end + 1e-12:
                continue
            ts.append(f.time)
            cs.append(f.mesh.V)
        return ts, cs

    # ------------- persistence -------------

    def save(self, outdir):
        os.makedirs(os.path.join(outdir, "frames"), exist_ok=True)
        index = {"frames": [], "events": self.events, "histories": {}}
        for k, f in enumerate(self.frames):
            name = f"frames/{k:04d}.ply"
            write_ply(os.path.join(outdir, name), f.mesh)
            index["frames"].append({"time": f.time, "kind": f.kind, "file": name})
        for ev, hist in self.histories.items():
            names = []
            os.makedirs(os.path.join(outdir, "history"), exist_ok=True)
            for k, (t, m) in enumerate(hist):
                name = f"history/{ev:03d}_{k:03d}.ply"
                write_ply(os.path.join(outdir, name), m)
                names.append({"time": t, "file": name})
            index["histories"][str(ev)] = names
        with open(os.path.join(outdir, "track.json"), "w") as fh:
            json.dump(index, fh, indent=1, sort_keys=True)

    @classmethod
    def load(cls, outdir):
        with open(os.path.join(outdir, "track.json")) as fh:
            index = json.load(fh)
        track = cls()
        for rec in index["frames"]:
            mesh = read_ply(os.path.join(outdir, rec["file"]))
            track.frames.append(Frame(rec["time"], mesh, rec["kind"]))
        track.events = index["events"]
        for ev, names in index.get("histories", {}).items():
            track.histories[int(ev)] = [
                (rec["time"], read_ply(os.path.join(outdir, rec["file"])))
                for rec in names
            ]
        return track
