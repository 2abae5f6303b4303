"""Standard (rho, theta) Hough accumulator with peak suppression."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Line:
    rho: float
    theta: float  # [0, pi)
    votes: int

    @property
    def direction(self) -> np.ndarray:
        return np.array([-math.sin(self.theta), math.cos(self.theta)])

    @property
    def normal(self) -> np.ndarray:
        return np.array([math.cos(self.theta), math.sin(self.theta)])

    def to_dict(self) -> dict:
        return {"rho": self.rho, "theta": self.theta, "votes": self.votes}


@dataclass
class LineSet:
    lines: list[Line]

    def __len__(self):
        return len(self.lines)

    def __iter__(self):
        return iter(self.lines)

    def __getitem__(self, i):
        return self.lines[i]

    def dominant(self) -> Line:
        if not self.lines:
            raise ValueError("line set is empty")
        return max(self.lines, key=lambda l: l.votes)


def accumulate(points: np.ndarray, rho_res: float, thetas: np.ndarray, rho_max: float) -> np.ndarray:
    n_rho = int(math.floor(2 * rho_max / rho_res)) + 1
    acc = np.zeros(n_rho * len(thetas), dtype=np.int64)
    cs, sn = np.cos(thetas), np.sin(thetas)
    cols = np.arange(len(thetas))
    for s in range(0, len(points), 4096):
        p = points[s:s + 4096].astype(float)
        rho = p[:, :1] * cs + p[:, 1:] * sn
        r = np.rint((rho + rho_max) / rho_res).astype(np.int64)
        acc += np.bincount((r * len(thetas) + cols).ravel(), minlength=acc.size)
    return acc.reshape(n_rho, len(thetas))


def hough_lines(points, rho_res: float = 1.0, theta_res: float = math.radians(1.0), min_votes: int = 30,
                max_lines: int = 8, peak_rho: int = 8, peak_theta: int = 5) -> LineSet:
    pts = np.asarray(points).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("empty contour set")
    n_theta = int(round(math.pi / theta_res))
    thetas = np.arange(n_theta) * (math.pi / n_theta)
    rho_max = float(np.ceil(np.abs(pts).sum(1).max())) + rho_res
    acc = accumulate(pts, rho_res, thetas, rho_max)
    n_rho = acc.shape[0]
    lines = []
    while len(lines) < max_lines:
        idx = int(np.argmax(acc))
        r0, t0 = divmod(idx, n_theta)
        votes = int(acc[r0, t0])
        if votes < min_votes:
            break
        lines.append(Line(float(r0 * rho_res - rho_max), float(thetas[t0]), votes))
        for dt in range(-peak_theta, peak_theta + 1):
            t = t0 + dt
            r = r0
            if t < 0 or t >= n_theta:
                # theta wraps to theta +- pi with rho negated
                t %= n_theta
                r = (n_rho - 1) - r0
            acc[max(0, r - peak_rho):r + peak_rho + 1, t] = 0
    return LineSet(lines)
