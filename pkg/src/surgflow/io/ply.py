"""Binary little-endian PLY export/import of mesh frames.

Vertices carry the curvature scalars (H, lambda1, lambda2) and a uchar wall
flag so frames can be inspected in standard viewers and reloaded losslessly.
"""
import numpy as np

from ..mesh import SurfaceMesh

VERTEX_DTYPE = np.dtype(
    [
        ("x", "<f8"),
        ("y", "<f8"),
        ("z", "<f8"),
        ("H", "<f8"),
        ("lambda1", "<f8"),
        ("lambda2", "<f8"),
        ("wall", "u1"),
    ]
)


def write_ply(path, mesh):
    n, m = mesh.n_vertices, mesh.n_triangles
    vert = np.zeros(n, dtype=VERTEX_DTYPE)
    vert["x"], vert["y"], vert["z"] = mesh.V[:, 0], mesh.V[:, 1], mesh.V[:, 2]
    zeros = np.zeros(n)
    vert["H"] = mesh.H if mesh.H is not None else zeros
    vert["lambda1"] = mesh.lam1 if mesh.lam1 is not None else zeros
    vert["lambda2"] = mesh.lam2 if mesh.lam2 is not None else zeros
    vert["wall"] = mesh.wall.astype(np.uint8)
    face_dtype = np.dtype([("count", "u1"), ("v", "<i4", (3,))])
    face = np.zeros(m, dtype=face_dtype)
    face["count"] = 3
    face["v"] = mesh.F.astype(np.int32)
    header = (
        "ply\n"
        "format binary_little_endian 1.0\n"
        f"element vertex {n}\n"
        "property double x\nproperty double y\nproperty double z\n"
        "property double H\nproperty double lambda1\nproperty double lambda2\n"
        "property uchar wall\n"
        f"element face {m}\n"
        "property list uchar int32 vertex_indices\n"
        "end_header\n"
    )
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(vert.tobytes())
        f.write(face.tobytes())


def read_ply(path):
    """Read a PLY written by write_ply back into a SurfaceMesh."""
    with open(path, "rb") as f:
        data = f.read()
    end = data.index(b"end_header\n") + len(b"end_header\n")
    header = data[:end].decode("ascii").splitlines()
    n = m = 0
    for line in header:
        if line.startswith("element vertex"):
            n = int(line.split()[-1])
        elif line.startswith("element face"):
            m = int(line.split()[-1])
    vert = np.frombuffer(data, dtype=VERTEX_DTYPE, count=n, offset=end)
    face_dtype = np.dtype([("count", "u1"), ("v", "<i4", (3,))])
    face = np.frombuffer(
        data, dtype=face_dtype, count=m, offset=end + n * VERTEX_DTYPE.itemsize
    )
    V = np.column_stack([vert["x"], vert["y"], vert["z"]])
    mesh = SurfaceMesh(V, face["v"].astype(np.int64), vert["wall"].astype(bool))
    mesh.H = vert["H"].copy()
    mesh.lam1 = vert["lambda1"].copy()
    mesh.lam2 = vert["lambda2"].copy()
    return mesh


def write_point_cloud(path, points):
    """Point-cloud PLY (used for level-set zero sets)."""
    points = np.asarray(points, dtype=np.float64)
    header = (
        "ply\n"
        "format binary_little_endian 1.0\n"
        f"element vertex {len(points)}\n"
        "property double x\nproperty double y\nproperty double z\n"
        "end_header\n"
    )
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(np.ascontiguousarray(points, dtype="<f8").tobytes())
