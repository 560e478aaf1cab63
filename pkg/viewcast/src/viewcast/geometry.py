"""Sphere helpers shared across the package."""

from __future__ import annotations

import numpy as np


def angles_to_vec(yaw_deg, pitch_deg) -> np.ndarray:
    """Unit vectors from yaw/pitch in degrees; broadcasts over arrays."""
    yaw = np.radians(np.asarray(yaw_deg, dtype=np.float64))
    pitch = np.radians(np.asarray(pitch_deg, dtype=np.float64))
    return np.stack(
        [np.cos(pitch) * np.cos(yaw), np.cos(pitch) * np.sin(yaw), np.sin(pitch)],
        axis=-1,
    )


def vec_to_angles(vec: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    v = np.asarray(vec, dtype=np.float64)
    yaw = np.degrees(np.arctan2(v[..., 1], v[..., 0]))
    pitch = np.degrees(np.arcsin(np.clip(v[..., 2], -1.0, 1.0)))
    return yaw, pitch


def great_circle(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Arc length between unit vectors, radians; broadcasts over rows."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    cross = np.linalg.norm(np.cross(a, b), axis=-1)
    dot = np.sum(a * b, axis=-1)
    return np.arctan2(cross, dot)
