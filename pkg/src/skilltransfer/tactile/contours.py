"""Adaptive contour extraction for visuotactile frames.

Array convention: images are indexed ``img[y, x]``; contour points are
stored as ``(x, y)`` pixel coordinates.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage

from .hough import LineSet, hough_lines


class PerceptionError(ValueError):
    code = "perception-error"


@dataclass(frozen=True)
class PerceptionConfig:
    kernel_size: int = 5
    sigma: float = 1.0
    method: str = "adaptive"  # or "fixed"
    k_high: float = 2.0
    k_low: float = 1.0
    fixed_high: float = 60.0
    fixed_low: float = 30.0
    # Smoothed frames are rounded back to 8-bit levels so flat regions give exact zeros.
    quantize: bool = True
    # Frames whose texture threshold stays below this are treated as no contact.
    min_texture: float = 2.0
    rho_res: float = 1.0
    theta_res_deg: float = 1.0
    min_votes: int = 30
    max_lines: int = 8
    peak_rho: int = 8
    peak_theta: int = 5

    def __post_init__(self):
        if self.method not in ("adaptive", "fixed"):
            raise ValueError(f"unknown threshold method {self.method!r}")
        if self.k_low > self.k_high or self.fixed_low > self.fixed_high:
            raise ValueError("low threshold factor exceeds high")

    def to_dict(self):
        return asdict(self)


@dataclass
class GradientField:
    magnitude: np.ndarray
    direction: np.ndarray
    smoothed: np.ndarray


@dataclass
class ContourSet:
    points: np.ndarray  # (n, 2) integer (x, y)
    texture: float
    high: float
    low: float
    shape: tuple[int, int] = (240, 320)

    def __len__(self):
        return len(self.points)

    def mask(self) -> np.ndarray:
        m = np.zeros(self.shape, dtype=bool)
        if len(self.points):
            m[self.points[:, 1], self.points[:, 0]] = True
        return m


def gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    if size < 3 or size % 2 == 0:
        raise PerceptionError(f"kernel size must be odd and >= 3, got {size}")
    if not sigma > 0:
        raise PerceptionError("sigma must be positive")
    r = size // 2
    x = np.arange(-r, r + 1, dtype=float)
    g = np.exp(-(x[:, None] ** 2 + x[None, :] ** 2) / (2 * sigma * sigma))
    return g / g.sum()


def gaussian_smooth(image, size: int = 5, sigma: float = 1.0) -> np.ndarray:
    k = gaussian_kernel(size, sigma)
    return ndimage.convolve(np.asarray(image, dtype=float), k, mode="nearest")


def gradient_field(S) -> GradientField:
    """Central differences; i runs along x (columns), j along y (rows). Border magnitude is 0."""
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or min(S.shape) < 3:
        raise PerceptionError("image must be at least 3x3")
    gx = np.zeros_like(S)
    gy = np.zeros_like(S)
    gx[1:-1, 1:-1] = S[1:-1, 2:] - S[1:-1, :-2]
    gy[1:-1, 1:-1] = S[2:, 1:-1] - S[:-2, 1:-1]
    return GradientField(np.hypot(gx, gy), np.arctan2(gy, gx), S)


def texture_threshold(grad) -> float:
    G = grad.magnitude if isinstance(grad, GradientField) else np.asarray(grad, dtype=float)
    nz = G[G != 0]
    if nz.size == 0:
        raise PerceptionError("gradient map is all zero")
    return float(math.floor(nz.mean()))


def nonmax_suppress(grad: GradientField) -> np.ndarray:
    G = grad.magnitude
    ang = np.rad2deg(grad.direction) % 180.0
    b = (np.floor((ang + 22.5) / 45.0).astype(int)) % 4  # 0, 45, 90, 135 degrees
    P = np.pad(G, 1)
    h, w = G.shape
    c = lambda dy, dx: P[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]
    # offsets in (row, col); direction angle measured from +x towards +y (down the rows)
    pairs = {0: ((0, 1), (0, -1)), 1: ((1, 1), (-1, -1)), 2: ((1, 0), (-1, 0)), 3: ((1, -1), (-1, 1))}
    keep = np.zeros_like(G, dtype=bool)
    for k, (a, bb) in pairs.items():
        sel = b == k
        keep |= sel & (G >= c(*a)) & (G >= c(*bb))
    out = np.where(keep & (G > 0), G, 0.0)
    return out


def hysteresis(N: np.ndarray, high: float, low: float, shape=None) -> ContourSet:
    if low > high:
        raise PerceptionError(f"threshold order violated: low {low} > high {high}")
    N = np.asarray(N, dtype=float)
    strong = N >= high
    cand = (N >= low) & (N > 0)
    if high <= 0:
        strong &= N > 0
    lab, n = ndimage.label(cand | strong, structure=np.ones((3, 3), dtype=int))
    if n:
        hit = np.unique(lab[strong])
        keep = np.isin(lab, hit[hit > 0])
    else:
        keep = np.zeros_like(strong)
    ys, xs = np.nonzero(keep)
    return ContourSet(np.stack([xs, ys], axis=1).astype(int), float("nan"), float(high), float(low),
                      tuple(N.shape))


def thresholds(T: float, config: PerceptionConfig) -> tuple[float, float]:
    if config.method == "fixed":
        return config.fixed_high, config.fixed_low
    return config.k_high * T, config.k_low * T


def extract_contours(image, config: PerceptionConfig | None = None) -> tuple[ContourSet, LineSet]:
    config = config or PerceptionConfig()
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise PerceptionError("expected a single-channel image")
    S = gaussian_smooth(img, config.kernel_size, config.sigma)
    if config.quantize:
        S = np.clip(np.round(S), 0, 255)
    grad = gradient_field(S)
    T = texture_threshold(grad)
    high, low = thresholds(T, config)
    if config.method == "adaptive" and T < config.min_texture:
        empty = ContourSet(np.zeros((0, 2), dtype=int), T, high, low, img.shape)
        return empty, LineSet([])
    N = nonmax_suppress(grad)
    C = hysteresis(N, high, low, img.shape)
    C.texture = T
    if len(C) == 0:
        return C, LineSet([])
    H = hough_lines(C.points, config.rho_res, math.radians(config.theta_res_deg),
                    config.min_votes, config.max_lines, config.peak_rho, config.peak_theta)
    return C, H


def _point_segment_dist2(P: np.ndarray, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Squared distance of every point in P (n,2) to every segment A->B (m,2); returns (n,m)."""
    AB = B - A
    L2 = np.maximum((AB ** 2).sum(1), 1e-300)
    AP = P[:, None, :] - A[None, :, :]
    dot = (AP * AB[None]).sum(-1)
    # interior: perpendicular distance via the cross product (exact zero for collinear points)
    cross = AP[..., 0] * AB[None, :, 1] - AP[..., 1] * AB[None, :, 0]
    end_a = (AP ** 2).sum(-1)
    end_b = ((P[:, None, :] - B[None, :, :]) ** 2).sum(-1)
    return np.where(dot <= 0, end_a, np.where(dot >= L2[None], end_b, cross ** 2 / L2[None]))


def truth_segments(truth) -> tuple[np.ndarray, np.ndarray]:
    polys = [np.asarray(p, dtype=float).reshape(-1, 2) for p in truth]
    A = [p[:-1] for p in polys if len(p) >= 2] + [p for p in polys if len(p) == 1]
    B = [p[1:] for p in polys if len(p) >= 2] + [p for p in polys if len(p) == 1]
    if not A:
        raise PerceptionError("ground-truth contour is empty")
    return np.concatenate(A), np.concatenate(B)


def contour_rmse(points, truth) -> float:
    """RMSE of extracted points to the nearest point of the truth polylines (exact segment distance)."""
    P = points.points if isinstance(points, ContourSet) else np.asarray(points, dtype=float)
    P = np.asarray(P, dtype=float).reshape(-1, 2)
    if len(P) == 0:
        raise PerceptionError("contour set is empty")
    A, B = truth_segments(truth)
    best = np.full(len(P), np.inf)
    for s in range(0, len(A), 256):
        best = np.minimum(best, _point_segment_dist2(P, A[s:s + 256], B[s:s + 256]).min(1))
    return float(np.sqrt(best.mean()))
