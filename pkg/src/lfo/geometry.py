"""Small vector helpers used throughout the pipeline."""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError


def as_vec3(v, name: str = "vector") -> np.ndarray:
    a = np.asarray(v, dtype=float).reshape(-1)
    if a.shape != (3,):
        raise InvalidInputError(f"{name} must have 3 components, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} has non-finite components: {a.tolist()}")
    return a


def unit(v, name: str = "vector", tol: float = 1e-6) -> np.ndarray:
    """Validate that v is a unit 3-vector (within tol) and return it as float64."""
    a = as_vec3(v, name)
    n = float(np.linalg.norm(a))
    if abs(n - 1.0) > tol:
        raise InvalidInputError(f"{name} must be unit length, |v| = {n:.9f}")
    return a


def normalized(v, name: str = "vector") -> np.ndarray:
    a = as_vec3(v, name)
    n = float(np.linalg.norm(a))
    if n < 1e-12:
        raise InvalidInputError(f"{name} has zero length")
    return a / n


def angle_between(u, v) -> float:
    """Angle in radians between two vectors (not required to be unit)."""
    a = normalized(u, "u")
    b = normalized(v, "v")
    return float(np.arccos(np.clip(np.dot(a, b), -1.0, 1.0)))


def fibonacci_sphere(n: int) -> np.ndarray:
    """Deterministic quasi-uniform sample of n directions on the unit sphere."""
    if n < 1:
        raise InvalidInputError("sample count must be >= 1")
    i = np.arange(n, dtype=float)
    z = 1.0 - 2.0 * (i + 0.5) / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    golden = np.pi * (3.0 - np.sqrt(5.0))
    theta = golden * i
    return np.column_stack([r * np.cos(theta), r * np.sin(theta), z])


def orthonormal_basis_from(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors completing a right-handed frame with unit vector a."""
    ref = np.array([0.0, 0.0, 1.0]) if abs(a[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    t1 = np.cross(a, ref)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(a, t1)
    return t1, t2
