"""Side-by-side match visualization."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .detect import Keypoint
from .image import Image, RgbImage, as_rgb
from .matcher import Match

PALETTE = (
    (255, 0, 0),
    (0, 255, 0),
    (0, 128, 255),
    (255, 255, 0),
    (255, 0, 255),
    (0, 255, 255),
    (255, 128, 0),
    (128, 0, 255),
    (0, 255, 128),
    (255, 0, 128),
)


@dataclass(frozen=True)
class DrawConfig:
    top_k: int = 10
    thickness: int = 1
    marker_radius: int = 4

    def __post_init__(self) -> None:
        if self.top_k < 0:
            raise ValueError("top_k must be >= 0")
        if self.thickness < 1 or self.marker_radius < 0:
            raise ValueError("thickness must be >= 1 and marker_radius >= 0")


def bresenham(x0: int, y0: int, x1: int, y1: int) -> list[tuple[int, int]]:
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    pts = []
    while True:
        pts.append((x0, y0))
        if x0 == x1 and y0 == y1:
            return pts
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def _stamp(canvas: np.ndarray, x: int, y: int, color, thickness: int) -> None:
    h, w = canvas.shape[:2]
    lo = -(thickness // 2)
    hi = lo + thickness
    canvas[max(y + lo, 0) : max(min(y + hi, h), 0), max(x + lo, 0) : max(min(x + hi, w), 0)] = color


def _circle(canvas: np.ndarray, cx: int, cy: int, radius: int, color) -> None:
    h, w = canvas.shape[:2]
    r = radius
    dy, dx = np.mgrid[-r - 1 : r + 2, -r - 1 : r + 2]
    ring = np.abs(np.hypot(dx, dy) - r) < 0.5
    ys, xs = cy + dy[ring], cx + dx[ring]
    ok = (xs >= 0) & (xs < w) & (ys >= 0) & (ys < h)
    canvas[ys[ok], xs[ok]] = color


def draw_matches(
    img1: Image,
    kps1: Sequence[Keypoint],
    img2: Image,
    kps2: Sequence[Keypoint],
    matches: Sequence[Match],
    cfg: DrawConfig = DrawConfig(),
) -> RgbImage:
    """Concatenate both images and draw the first ``cfg.top_k`` matches.

    Matches are drawn in the given order, so sort them first for "best k".
    """
    a, b = as_rgb(img1).pixels, as_rgb(img2).pixels
    h = max(a.shape[0], b.shape[0])
    canvas = np.zeros((h, a.shape[1] + b.shape[1], 3), dtype=np.uint8)
    canvas[: a.shape[0], : a.shape[1]] = a
    canvas[: b.shape[0], a.shape[1] :] = b
    offset = a.shape[1]
    shown = list(matches[: cfg.top_k])
    for m in shown:
        if not (0 <= m.query_idx < len(kps1) and 0 <= m.train_idx < len(kps2)):
            raise IndexError(f"match {m} refers to a missing keypoint")
    for n, m in enumerate(shown):
        color = PALETTE[n % len(PALETTE)]
        k1, k2 = kps1[m.query_idx], kps2[m.train_idx]
        p = (int(round(k1.x)), int(round(k1.y)))
        q = (int(round(k2.x)) + offset, int(round(k2.y)))
        for x, y in bresenham(*p, *q):
            _stamp(canvas, x, y, color, cfg.thickness)
        if cfg.marker_radius:
            _circle(canvas, *p, cfg.marker_radius, color)
            _circle(canvas, *q, cfg.marker_radius, color)
    return RgbImage(canvas)
