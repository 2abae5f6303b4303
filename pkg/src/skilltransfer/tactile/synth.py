"""Synthetic visuotactile frames with analytic contours.

A contact edge shows up as a bright ridge with a Gaussian cross-section.
Inside the contact region a zero-mean triangular stripe pattern adds
moderate gradients, kept a few pixels away from the ridges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SHAPES = ("rect-line", "acute-angle", "right-angle", "circle", "pentagon", "line-bundle")

WIDTH, HEIGHT = 320, 240
FAR = 5000.0  # length used for rays and half-planes that extend past the frame


@dataclass(frozen=True)
class Stripes:
    amplitude: float = 100.0
    period: float = 12.0
    angle: float = 0.0  # direction of the stripe lines, radians
    margin: float = 8.0
    ramp: float = 6.0


@dataclass(frozen=True)
class Ridge:
    background: float = 100.0
    amplitude: float = 400.0  # clips at 255, giving a flat-topped ridge
    width: float = 0.8


@dataclass(frozen=True)
class ShapePose:
    cx: float
    cy: float
    angle: float = 0.0


DEFAULT_POSES = {
    "rect-line": ShapePose(145.0, 125.0, math.pi / 4),
    "acute-angle": ShapePose(30.0, 220.0, 0.0),
    "right-angle": ShapePose(40.0, 220.0, 0.0),
    "circle": ShapePose(160.0, 120.0, 0.0),
    "pentagon": ShapePose(160.0, 120.0, -math.pi / 2),
    "line-bundle": ShapePose(160.0, 120.0, 0.0),
}

DEFAULT_SIZES = {"acute-angle": math.radians(35.0), "right-angle": math.pi / 2,
                 "circle": 100.0, "pentagon": 100.0, "line-bundle": 45.0}


@dataclass
class ShapeGeometry:
    polylines: list[np.ndarray]  # analytic contour, may extend past the frame
    region: object  # callable (xx, yy) -> bool mask of the contact region
    circle: tuple[float, float, float] | None = None


def _unit(a):
    return np.array([math.cos(a), math.sin(a)])


def _half_plane(p, n):
    return lambda xx, yy: (xx - p[0]) * n[0] + (yy - p[1]) * n[1] > 0


def _convex(verts):
    v = np.asarray(verts, dtype=float)

    def inside(xx, yy):
        s = np.zeros(xx.shape, dtype=int)
        for a, b in zip(v, np.roll(v, -1, axis=0)):
            cr = (b[0] - a[0]) * (yy - a[1]) - (b[1] - a[1]) * (xx - a[0])
            s += np.sign(cr).astype(int)
        return np.abs(s) == len(v)
    return inside


def shape_geometry(shape: str, pose: ShapePose | None = None, size: float | None = None) -> ShapeGeometry:
    if shape not in SHAPES:
        raise ValueError(f"unknown shape {shape!r}")
    pose = pose or DEFAULT_POSES[shape]
    size = DEFAULT_SIZES.get(shape) if size is None else size
    c = np.array([pose.cx, pose.cy])
    a = pose.angle
    if shape == "rect-line":
        d = _unit(a)
        line = np.array([c - FAR * d, c + FAR * d])
        return ShapeGeometry([line], _half_plane(c, np.array([d[1], -d[0]])))
    if shape in ("acute-angle", "right-angle"):
        p1 = c + FAR * _unit(a)
        p2 = c + FAR * _unit(a - size)
        return ShapeGeometry([np.array([p1, c, p2])], _convex([c, p1, p2]))
    if shape == "circle":
        t = np.linspace(0.0, 2 * math.pi, 361)[:, None]
        poly = c + size * np.hstack([np.cos(t + a), np.sin(t + a)])
        poly[-1] = poly[0]
        return ShapeGeometry([poly], lambda xx, yy: np.hypot(xx - c[0], yy - c[1]) < size,
                             (c[0], c[1], size))
    if shape == "pentagon":
        verts = np.array([c + size * _unit(a + k * 2 * math.pi / 5) for k in range(5)])
        return ShapeGeometry([np.vstack([verts, verts[:1]])], _convex(verts))
    # line-bundle: five parallel lines, spacing `size`, contact everywhere
    d, n = _unit(a), _unit(a + math.pi / 2)
    lines = [np.array([c + (k - 2) * size * n - FAR * d, c + (k - 2) * size * n + FAR * d]) for k in range(5)]
    return ShapeGeometry(lines, lambda xx, yy: np.ones(xx.shape, dtype=bool))


def _clip_segment(p, q, w, h):
    """Liang-Barsky clip of p->q to [0, w-1] x [0, h-1]; None if outside."""
    d = q - p
    t0, t1 = 0.0, 1.0
    for k, hi in ((0, w - 1), (1, h - 1)):
        for lim, sgn in ((0.0, -1.0), (float(hi), 1.0)):
            if d[k] == 0:
                if (p[k] < 0 or p[k] > hi):
                    return None
                continue
            t = (lim - p[k]) / d[k]
            if sgn * d[k] > 0:
                t1 = min(t1, t)
            else:
                t0 = max(t0, t)
    if t0 >= t1:
        return None
    return p + t0 * d, p + t1 * d


def clip_polylines(polylines, w=WIDTH, h=HEIGHT) -> list[np.ndarray]:
    out = []
    for poly in polylines:
        cur = []
        for p, q in zip(poly[:-1], poly[1:]):
            seg = _clip_segment(np.asarray(p, float), np.asarray(q, float), w, h)
            if seg is None:
                if len(cur) > 1:
                    out.append(np.array(cur))
                cur = []
                continue
            a, b = seg
            if cur and np.allclose(cur[-1], a):
                cur.append(b)
            else:
                if len(cur) > 1:
                    out.append(np.array(cur))
                cur = [a, b]
        if len(cur) > 1:
            out.append(np.array(cur))
    return out


def _distance(geom: ShapeGeometry, xx, yy):
    if geom.circle is not None:
        cx, cy, r = geom.circle
        return np.abs(np.hypot(xx - cx, yy - cy) - r)
    d = np.full(xx.shape, np.inf)
    for poly in geom.polylines:
        for p, q in zip(poly[:-1], poly[1:]):
            v = q - p
            t = np.clip(((xx - p[0]) * v[0] + (yy - p[1]) * v[1]) / (v @ v), 0.0, 1.0)
            d = np.minimum(d, np.hypot(xx - p[0] - t * v[0], yy - p[1] - t * v[1]))
    return d


def triangle_wave(u):
    """Zero-mean triangle wave in [-1, 1] with unit period."""
    return 2.0 * (1.0 - np.abs(2.0 * (u - np.floor(u)) - 1.0)) - 1.0


def synth_tactile_image(shape: str, pose: ShapePose | None = None, texture: Stripes | None = Stripes(),
                        noise: float = 0.5, rng=None, size: float | None = None, contrast: float = 1.0,
                        ridge: Ridge = Ridge(), width: int = WIDTH, height: int = HEIGHT):
    """Render a frame and return ``(image uint8 [h, w], truth polylines clipped to the frame)``."""
    rng = np.random.default_rng(rng)
    geom = shape_geometry(shape, pose, size)
    truth = clip_polylines(geom.polylines, width, height)
    if not truth:
        raise ValueError(f"{shape} lies entirely outside the frame")
    yy, xx = np.mgrid[0:height, 0:width].astype(float)
    d = _distance(geom, xx, yy)
    img = ridge.background + contrast * ridge.amplitude * np.exp(-d ** 2 / (2 * ridge.width ** 2))
    if texture is not None:
        win = geom.region(xx, yy) * np.clip((d - texture.margin) / texture.ramp, 0.0, 1.0)
        phi = texture.angle + math.pi / 2
        u = (xx * math.cos(phi) + yy * math.sin(phi)) / texture.period
        img = img + win * contrast * texture.amplitude * triangle_wave(u)
    if noise > 0:
        img = img + rng.normal(0.0, noise, img.shape)
    return np.clip(np.round(img), 0, 255).astype(np.uint8), truth


def blank_image(noise: float = 1.0, rng=None, background: float = 100.0, width: int = WIDTH, height: int = HEIGHT):
    rng = np.random.default_rng(rng)
    img = background + rng.normal(0.0, noise, (height, width))
    return np.clip(np.round(img), 0, 255).astype(np.uint8)


def edge_pose(shape: str, fraction: float = 0.4, size: float | None = None,
              width: int = WIDTH, height: int = HEIGHT) -> ShapePose:
    """Shift a shape so that ``fraction`` of its extent leaves the frame.

    Closed shapes move right along x; the line bundle moves across its lines.
    """
    base = DEFAULT_POSES[shape]
    if shape == "line-bundle":
        spacing = DEFAULT_SIZES[shape] if size is None else size
        n = _unit(base.angle + math.pi / 2)
        span = 4 * spacing
        # outermost line sits `fraction * span` past the far edge along n
        far = (height - 1) if abs(n[1]) >= abs(n[0]) else (width - 1)
        lead = (base.cy if abs(n[1]) >= abs(n[0]) else base.cx) + 2 * spacing
        shift = far + fraction * span - lead
        return ShapePose(base.cx + shift * n[0], base.cy + shift * n[1], base.angle)
    geom = shape_geometry(shape, base, size)
    pts = np.vstack(geom.polylines)
    if geom.circle is not None:
        lo, hi = geom.circle[0] - geom.circle[2], geom.circle[0] + geom.circle[2]
    else:
        lo, hi = pts[:, 0].min(), pts[:, 0].max()
    shift = (width - 1) + fraction * (hi - lo) - hi
    return ShapePose(base.cx + shift, base.cy, base.angle)
