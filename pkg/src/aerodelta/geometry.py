"""Frame conventions and small vector helpers shared across the package.

The inertial frame has its z axis along gravity, so hover altitudes are
negative z. The vehicle body frame differs from inertial by yaw only.
All positions are meters, angles radians.
"""

from __future__ import annotations

import math

import numpy as np

ROT_TOL = 1e-9


def as_vec3(v, name: str = "vector") -> np.ndarray:
    """Validate and return a copy of v as a float (3,) array."""
    arr = np.asarray(v, dtype=float)
    if arr.shape != (3,):
        raise ValueError(f"{name} must have shape (3,), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {arr}")
    return arr.copy()


def as_diag_gain(v, name: str = "gain") -> np.ndarray:
    """Validate a per-axis gain: three finite, strictly positive entries."""
    arr = as_vec3(v, name)
    if np.any(arr <= 0.0):
        raise ValueError(f"{name} entries must be positive, got {arr}")
    return arr


def check_rotation(r, name: str = "rotation") -> np.ndarray:
    """Validate a proper rotation matrix (orthonormal, det +1) within ROT_TOL."""
    arr = np.asarray(r, dtype=float)
    if arr.shape != (3, 3):
        raise ValueError(f"{name} must have shape (3, 3), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    err = np.abs(arr.T @ arr - np.eye(3)).max()
    if err > ROT_TOL:
        raise ValueError(f"{name} is not orthonormal (residual {err:.3e})")
    if np.linalg.det(arr) < 0.0:
        raise ValueError(f"{name} has negative determinant (reflection)")
    return arr.copy()


def yaw_rotation(psi: float) -> np.ndarray:
    """Rotation about the common z axis by yaw angle psi."""
    c, s = math.cos(psi), math.sin(psi)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def yaw_of(r: np.ndarray) -> float:
    """Extract the yaw angle from a yaw-only rotation matrix."""
    return math.atan2(r[1, 0], r[0, 0])


def skew(v) -> np.ndarray:
    """Cross-product matrix: skew(a) @ b == cross(a, b)."""
    x, y, z = np.asarray(v, dtype=float)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    return math.pi - (math.pi - a) % (2.0 * math.pi)


def axis_angle_rotation(theta) -> np.ndarray:
    """Rotation matrix for a rotation vector (axis * angle), via Rodrigues.

    Exact for any magnitude, so the result is orthonormal to machine
    precision even when used for tiny perturbations.
    """
    theta = as_vec3(theta, "theta")
    angle = float(np.linalg.norm(theta))
    if angle < 1e-15:
        return np.eye(3)
    k = skew(theta / angle)
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)
