"""Image loading, contour JSON and SVG overlays."""

from __future__ import annotations

import base64
import io
import json
import math
from pathlib import Path

import numpy as np
from PIL import Image

from .contours import ContourSet
from .hough import Line, LineSet


def read_image(path) -> np.ndarray:
    """8-bit grayscale PGM (P5) or PNG as a uint8 array [h, w]."""
    with Image.open(path) as im:
        if im.mode not in ("L", "P", "1", "I;16", "I", "RGB", "RGBA", "LA"):
            raise ValueError(f"{path}: unsupported image mode {im.mode}")
        return np.asarray(im.convert("L"), dtype=np.uint8).copy()


def write_image(path, image: np.ndarray):
    """Format follows the suffix (.pgm writes binary P5, .png writes PNG)."""
    Image.fromarray(np.asarray(image, dtype=np.uint8), mode="L").save(path)


def _num(v):
    return None if v is None or (isinstance(v, float) and math.isnan(v)) else float(v)


def contours_to_dict(C: ContourSet, H: LineSet) -> dict:
    return {
        "points": [[int(x), int(y)] for x, y in C.points],
        "lines": [l.to_dict() for l in H],
        "thresholds": {"texture": _num(C.texture), "high": _num(C.high), "low": _num(C.low)},
        "shape": [int(C.shape[0]), int(C.shape[1])],
    }


def contours_to_json(C: ContourSet, H: LineSet) -> str:
    return json.dumps(contours_to_dict(C, H), separators=(",", ":")) + "\n"


def contours_from_json(text: str) -> tuple[ContourSet, LineSet]:
    d = json.loads(text)
    th = d["thresholds"]
    nan = float("nan")
    pts = np.array(d["points"], dtype=int).reshape(-1, 2)
    C = ContourSet(pts, nan if th["texture"] is None else th["texture"],
                   nan if th["high"] is None else th["high"], nan if th["low"] is None else th["low"],
                   tuple(d.get("shape", (240, 320))))
    H = LineSet([Line(float(l["rho"]), float(l["theta"]), int(l["votes"])) for l in d["lines"]])
    return C, H


def _line_ends(line: Line, w: int, h: int):
    n, d = line.normal, line.direction
    p0 = n * line.rho
    # intersect with a generous span then let the viewBox clip
    L = float(w + h)
    return p0 - L * d, p0 + L * d


def svg_overlay(image: np.ndarray, C: ContourSet, H: LineSet, path=None) -> str:
    h, w = image.shape
    buf = io.BytesIO()
    Image.fromarray(np.asarray(image, dtype=np.uint8), mode="L").save(buf, format="PNG")
    href = "data:image/png;base64," + base64.b64encode(buf.getvalue()).decode()
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
             f'<image href="{href}" x="0" y="0" width="{w}" height="{h}"/>',
             '<g fill="#e6194b">']
    parts += [f'<circle cx="{x + 0.5}" cy="{y + 0.5}" r="0.6"/>' for x, y in C.points]
    parts.append('</g><g stroke="#3cb44b" stroke-width="1">')
    for l in H:
        a, b = _line_ends(l, w, h)
        parts.append(f'<line x1="{a[0]:.2f}" y1="{a[1]:.2f}" x2="{b[0]:.2f}" y2="{b[1]:.2f}"/>')
    parts.append("</g></svg>")
    svg = "\n".join(parts) + "\n"
    if path is not None:
        Path(path).write_text(svg)
    return svg
