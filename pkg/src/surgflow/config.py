"""Scenario configuration: declarative TOML files, validation, mesh setup."""
import sys
from dataclasses import dataclass, field

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .domain import make_domain
from .errors import ConfigError
from .flow import FlowControls
from .mesh import SurfaceMesh
from .primitives import dumbbell_mesh, icosphere, lens_slab
from .surgery import SurgeryParams


@dataclass
class ScenarioConfig:
    name: str
    domain_spec: dict
    initial: dict
    surgery: dict
    resolution: dict
    run: dict = field(default_factory=dict)
    oracles: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    seed: int = 0

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(
                name=data.get("name", "unnamed"),
                domain_spec=dict(data["domain"]),
                initial=dict(data["initial"]),
                surgery=dict(data.get("surgery", {})),
                resolution=dict(data.get("resolution", {})),
                run=dict(data.get("run", {})),
                oracles=dict(data.get("oracles", {})),
                diagnostics=dict(data.get("diagnostics", {})),
                seed=int(data.get("seed", 0)),
            )
        except KeyError as err:
            raise ConfigError(f"missing config section: {err}") from err

    @classmethod
    def from_toml(cls, path):
        with open(path, "rb") as fh:
            return cls.from_dict(tomllib.load(fh))

    def build_domain(self):
        try:
            return make_domain(self.domain_spec)
        except (KeyError, ValueError) as err:
            raise ConfigError(f"bad domain: {err}") from err

    def surgery_params(self):
        if not self.surgery or not self.surgery.get("enabled", True):
            return None
        try:
            return SurgeryParams(
                h_thick=float(self.surgery["h_thick"]),
                h_neck=float(self.surgery["h_neck"]),
                h_trigger=float(self.surgery["h_trigger"]),
                delta=float(self.surgery.get("delta", 1.0 / 300.0)),
                gamma=float(self.surgery.get("gamma", 3.0)),
                delta_check=float(self.surgery.get("delta_check", 0.45)),
            )
        except (KeyError, ValueError) as err:
            raise ConfigError(f"bad surgery parameters: {err}") from err

    def flow_controls(self):
        res = self.resolution
        run = self.run
        mesh_edge = float(res.get("mesh_edge", 0.05))
        if mesh_edge <= 0:
            raise ConfigError("mesh_edge must be positive")
        return FlowControls(
            base_edge=mesh_edge,
            t_max=float(run.get("t_max", 1.0)),
            frame_interval=float(run.get("frame_interval", 1e-3)),
            extinction_area_frac=float(run.get("extinction_area_frac", 1e-4)),
            seed=self.seed,
        )

    def build_initial_mesh(self, domain):
        kind = self.initial.get("kind")
        edge = float(self.resolution.get("mesh_edge", 0.05))
        if kind == "sphere":
            r = float(self.initial.get("radius", 1.0))
            center = self.initial.get("center", (0.0, 0.0, 0.0))
            sub = max(2, int(np.ceil(np.log2(max(r / edge, 1.0)))))
            V, F = icosphere(radius=r, center=center, subdivisions=sub)
            mesh = SurfaceMesh(V, F)
        elif kind == "dumbbell":
            V, F, _ = dumbbell_mesh(
                bell_radius=float(self.initial.get("bell_radius", 0.5)),
                neck_radius=float(self.initial.get("neck_radius", 0.1)),
                neck_half_width=float(self.initial.get("neck_half_width", 2.0)),
                target_edge=edge,
            )
            mesh = SurfaceMesh(V, F)
        elif kind == "half_dumbbell":
            mesh = _half_dumbbell(self, domain, edge)
        elif kind == "thickened_disk":
            V, F, wall = lens_slab(
                float(self.initial.get("face_radius", 5.0)),
                float(self.initial.get("thickness", 0.3)) / 2.0,
                _wall_radius(domain),
                edge,
            )
            mesh = SurfaceMesh(V, F, wall=wall)
            mesh.snap_wall(domain)
        elif kind == "mesh_file":
            from .io.ply import read_ply

            mesh = read_ply(self.initial["path"])
        else:
            raise ConfigError(f"unknown initial surface kind {kind!r}")
        mesh.estimate_curvature(domain, quadric=True)
        sd = domain.signed_distance(mesh.V)
        if np.any(sd > mesh.wall_tolerance(domain)):
            raise ConfigError("initial surface leaves the domain")
        if mesh.mean_convexity_floor() <= 0.0:
            raise ConfigError("initial surface is not strictly mean-convex")
        return mesh


def _wall_radius(domain):
    if getattr(domain, "kind", None) != "ball":
        raise ConfigError("thickened_disk scenarios need a ball domain")
    return domain.radius


def _half_dumbbell(cfg, domain, edge):
    """Dumbbell halved by the wall, built in a boundary chart.

    The plane model (revolve over angles in (pi, 2 pi), wall at the tangent
    plane) is mapped through the chart at the contact point, putting the
    seam exactly on the curved wall with near-orthogonal contact.
    """
    contact = np.asarray(cfg.initial.get("contact_point", None), dtype=float) if cfg.initial.get("contact_point") else None
    if contact is None:
        lo, hi = domain.bounding_box()
        top = np.array([0.0, 0.0, hi[2]])
        contact, _ = domain.project_to_boundary(top - np.array([0.0, 0.0, 1e-9]))
    fn_args = dict(
        bell_radius=float(cfg.initial.get("bell_radius", 0.5)),
        neck_radius=float(cfg.initial.get("neck_radius", 0.1)),
        neck_half_width=float(cfg.initial.get("neck_half_width", 2.0)),
        target_edge=edge,
    )
    V, F, seam = dumbbell_mesh(angle=(np.pi, 2 * np.pi), **fn_args)
    extent = 1.3 * float(np.max(np.abs(V)))
    if extent >= domain.focal_radius():
        raise ConfigError("half dumbbell too large for the wall chart")
    chart = domain.boundary_chart(contact, extent)
    # plane model: x along the axis, y across, z <= 0 into the half space
    duv = np.column_stack([-V[:, 2], V[:, 0], V[:, 1]])
    X = chart.forward(duv)
    mesh = SurfaceMesh(X, F, wall=seam)
    mesh.snap_wall(domain)
    return mesh
