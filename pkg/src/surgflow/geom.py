"""Small vector helpers used throughout the package."""
import numpy as np


def unit(v, axis=-1):
    """Normalize vectors along `axis`; zero vectors are left untouched."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=axis, keepdims=True)
    n = np.where(n > 0.0, n, 1.0)
    return v / n


def orthonormal_basis(n):
    """Two unit vectors spanning the plane orthogonal to unit vector `n`.

    Deterministic: the seed axis is chosen from the smallest component of n.
    """
    n = np.asarray(n, dtype=float)
    k = int(np.argmin(np.abs(n)))
    seed = np.zeros(3)
    seed[k] = 1.0
    e1 = seed - np.dot(seed, n) * n
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return e1, e2


def rotation_between(a, b):
    """Rotation matrix taking unit vector a to unit vector b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.cross(a, b)
    d = float(np.dot(a, b))
    if d < -1.0 + 1e-12:
        # antiparallel: rotate by pi around any axis orthogonal to a
        e1, _ = orthonormal_basis(a)
        return 2.0 * np.outer(e1, e1) - np.eye(3)
    k = 1.0 / (1.0 + d)
    cx = np.array([[0.0, -c[2], c[1]], [c[2], 0.0, -c[0]], [-c[1], c[0], 0.0]])
    return np.eye(3) + cx + k * (cx @ cx)


def fibonacci_sphere(n):
    """n roughly uniform unit directions (deterministic)."""
    i = np.arange(n, dtype=float) + 0.5
    phi = np.arccos(1.0 - 2.0 * i / n)
    theta = np.pi * (1.0 + np.sqrt(5.0)) * i
    return np.column_stack(
        [np.sin(phi) * np.cos(theta), np.sin(phi) * np.sin(theta), np.cos(phi)]
    )
