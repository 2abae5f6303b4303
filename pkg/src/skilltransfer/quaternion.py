"""Hamilton quaternions stored scalar-first as (w, x, y, z)."""

from __future__ import annotations

import math

import numpy as np

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


class QuaternionError(ValueError):
    pass


def as_quat(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (4,):
        raise QuaternionError(f"quaternion must have 4 components, got shape {q.shape}")
    return q


def is_unit(q, tol: float = 1e-9) -> bool:
    q = as_quat(q)
    return bool(np.all(np.isfinite(q)) and abs(np.linalg.norm(q) - 1.0) <= tol)


def require_unit(q, tol: float = 1e-6, name: str = "q") -> np.ndarray:
    q = as_quat(q)
    if not is_unit(q, tol):
        raise QuaternionError(f"{name} is not a unit quaternion (|q| = {np.linalg.norm(q):.3g})")
    return q


def normalize(q) -> np.ndarray:
    q = as_quat(q)
    n = np.linalg.norm(q)
    if n == 0 or not np.isfinite(n):
        raise QuaternionError("cannot normalize a zero or non-finite quaternion")
    return q / n


def canonical(q) -> np.ndarray:
    """Pick the representative with w >= 0."""
    q = as_quat(q)
    return -q if q[0] < 0 else q.copy()


def multiply(a, b) -> np.ndarray:
    aw, ax, ay, az = as_quat(a)
    bw, bx, by, bz = as_quat(b)
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def conjugate(q) -> np.ndarray:
    q = as_quat(q)
    return np.array([q[0], -q[1], -q[2], -q[3]])


def inverse(q) -> np.ndarray:
    q = as_quat(q)
    return conjugate(q) / float(q @ q)


def from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n == 0:
        raise QuaternionError("zero rotation axis")
    s = math.sin(angle / 2.0)
    return np.concatenate([[math.cos(angle / 2.0)], axis / n * s])


def about_z(angle: float) -> np.ndarray:
    return np.array([math.cos(angle / 2.0), 0.0, 0.0, math.sin(angle / 2.0)])


def to_matrix(q) -> np.ndarray:
    w, x, y, z = normalize(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def rotate(q, v) -> np.ndarray:
    return to_matrix(q) @ np.asarray(v, dtype=float)


def angle(q) -> float:
    """Rotation angle in [0, pi]."""
    q = normalize(q)
    return 2.0 * math.atan2(float(np.linalg.norm(q[1:])), abs(float(q[0])))


def angle_between(a, b) -> float:
    return angle(multiply(conjugate(normalize(a)), normalize(b)))


def yaw(q) -> float:
    """Signed angle about +z, assuming q is (close to) a pure z rotation."""
    q = canonical(normalize(q))
    return 2.0 * math.atan2(q[3], q[0])


def slerp(a, b, t: float) -> np.ndarray:
    a = normalize(a)
    b = normalize(b)
    d = float(a @ b)
    if d < 0:
        b, d = -b, -d
    if d > 0.9995:
        return normalize(a + t * (b - a))
    th = math.acos(min(d, 1.0))
    s = math.sin(th)
    return (math.sin((1 - t) * th) * a + math.sin(t * th) * b) / s
