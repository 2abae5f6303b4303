"""In-plane object pose from Hough lines and the quaternion chain sensor -> world."""

from __future__ import annotations

import math

import numpy as np

from .. import quaternion as quat
from .hough import LineSet


def pose_from_lines(lines: LineSet) -> np.ndarray:
    """Rotation about the sensor normal by the strongest line's angle.

    Line angles live in [0, pi); they are folded into (-pi/2, pi/2] so that
    small rotations stay small.
    """
    if len(lines) == 0:
        raise ValueError("empty line set")
    th = lines.dominant().theta
    if th > math.pi / 2:
        th -= math.pi
    return quat.about_z(th)


def world_pose(q1, q2, q3) -> np.ndarray:
    q1, q2, q3 = (quat.require_unit(q, 1e-6, n) for q, n in ((q1, "q1"), (q2, "q2"), (q3, "q3")))
    return quat.canonical(quat.normalize(quat.multiply(q3, quat.multiply(q2, q1))))


def pose_error(q_t, q_w) -> np.ndarray:
    q_t = quat.require_unit(q_t, 1e-6, "q_t")
    q_w = quat.require_unit(q_w, 1e-6, "q_w")
    return quat.canonical(quat.normalize(quat.multiply(q_t, quat.conjugate(q_w))))
