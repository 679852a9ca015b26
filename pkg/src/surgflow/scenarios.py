"""Built-in scenario library covering the verification suite."""
from .config import ScenarioConfig

LIBRARY = {
    "sphere": {
        "name": "sphere",
        "domain": {"shape": "ball", "radius": 1.3},
        "initial": {"kind": "sphere", "radius": 1.0},
        "surgery": {
            "h_thick": 40.0,
            "h_neck": 400.0,
            "h_trigger": 4000.0,
        },
        "resolution": {"mesh_edge": 0.12, "grid_edge": 0.05},
        "run": {"t_max": 0.4, "frame_interval": 2e-3},
    },
    "dumbbell": {
        "name": "dumbbell",
        "domain": {"shape": "ball", "radius": 1.3},
        "initial": {"kind": "dumbbell", "bell_radius": 0.5, "neck_radius": 0.1},
        "surgery": {
            "h_thick": 5.0,
            "h_neck": 50.0,
            "h_trigger": 500.0,
        },
        "resolution": {"mesh_edge": 0.045, "grid_edge": 0.026},
        "run": {"t_max": 0.09, "frame_interval": 5e-4},
    },
    "dumbbell_neck25": {
        "name": "dumbbell_neck25",
        "domain": {"shape": "ball", "radius": 1.3},
        "initial": {"kind": "dumbbell", "bell_radius": 0.5, "neck_radius": 0.1},
        "surgery": {
            "h_thick": 2.5,
            "h_neck": 25.0,
            "h_trigger": 250.0,
        },
        "resolution": {"mesh_edge": 0.045, "grid_edge": 0.026},
        "run": {"t_max": 0.02, "frame_interval": 5e-4},
    },
    "dumbbell_neck100": {
        "name": "dumbbell_neck100",
        "domain": {"shape": "ball", "radius": 1.3},
        "initial": {"kind": "dumbbell", "bell_radius": 0.5, "neck_radius": 0.1},
        "surgery": {
            "h_thick": 10.0,
            "h_neck": 100.0,
            "h_trigger": 1000.0,
        },
        "resolution": {"mesh_edge": 0.045, "grid_edge": 0.026},
        "run": {"t_max": 0.02, "frame_interval": 5e-4},
    },
    "half_dumbbell": {
        "name": "half_dumbbell",
        "domain": {"shape": "ball", "center": [0.0, 0.0, -20.0], "radius": 20.0},
        "initial": {"kind": "half_dumbbell", "bell_radius": 0.5, "neck_radius": 0.1},
        "surgery": {
            "h_thick": 5.0,
            "h_neck": 50.0,
            "h_trigger": 500.0,
        },
        "resolution": {"mesh_edge": 0.045, "grid_edge": 0.026},
        "run": {"t_max": 0.09, "frame_interval": 5e-4},
    },
    "thickened_disk": {
        "name": "thickened_disk",
        "domain": {"shape": "ball", "radius": 1.0},
        "initial": {"kind": "thickened_disk", "thickness": 0.3, "face_radius": 5.0},
        "surgery": {
            "h_thick": 40.0,
            "h_neck": 400.0,
            "h_trigger": 4000.0,
        },
        "resolution": {"mesh_edge": 0.07, "grid_edge": 0.05},
        "run": {"t_max": 2.5, "frame_interval": 0.01},
    },
}


def scenario(name) -> ScenarioConfig:
    from .errors import ConfigError

    if name not in LIBRARY:
        raise ConfigError(
            f"unknown scenario {name!r}; available: {', '.join(sorted(LIBRARY))}"
        )
    return ScenarioConfig.from_dict(LIBRARY[name])
