"""Deterministic synthetic images used by the tests and the ``fixture`` command."""

from __future__ import annotations

import numpy as np

from .image import GrayImage, RgbImage

# (R, G, B) whose BT.601 chroma is (Cb, Cr) = (100, 150), inside the default skin box.
SKIN_RGB = (181, 144, 100)
BACKDROP_RGB = (40, 150, 60)


def make_textured(width: int = 512, height: int = 512, seed: int = 7) -> GrayImage:
    """Random rectangles, triangles and discs of random gray levels on a noisy
    background, then light per-pixel noise so patches are distinguishable.

    Noise stays within +/-6 gray levels, below the default FAST threshold.
    """
    rng = np.random.default_rng(seed)
    canvas = np.full((height, width), 128.0)
    yy, xx = np.mgrid[0:height, 0:width]
    n_shapes = max(8, width * height // 1800)
    for _ in range(n_shapes):
        level = rng.integers(0, 256)
        kind = rng.integers(0, 3)
        cx, cy = rng.uniform(0, width), rng.uniform(0, height)
        size = rng.uniform(6, 40)
        if kind == 0:
            w, h = size, rng.uniform(6, 40)
            region = (np.abs(xx - cx) <= w / 2) & (np.abs(yy - cy) <= h / 2)
        elif kind == 1:
            ang = rng.uniform(0, 2 * np.pi) + np.array([0.0, 2.1, 4.0]) + rng.uniform(-0.4, 0.4, 3)
            vx = cx + size * np.cos(ang)
            vy = cy + size * np.sin(ang)
            region = np.ones_like(canvas, dtype=bool)
            orient = np.sign((vx[1] - vx[0]) * (vy[2] - vy[0]) - (vy[1] - vy[0]) * (vx[2] - vx[0]))
            for i in range(3):
                j = (i + 1) % 3
                cross = (vx[j] - vx[i]) * (yy - vy[i]) - (vy[j] - vy[i]) * (xx - vx[i])
                region &= orient * cross >= 0
        else:
            region = (xx - cx) ** 2 + (yy - cy) ** 2 <= (size / 3) ** 2
        canvas[region] = level
    canvas += rng.integers(-6, 7, size=canvas.shape)
    return GrayImage(np.clip(canvas, 0, 255).astype(np.uint8))


def make_dot_grid(rows: int = 4, cols: int = 5, spacing: int = 20, margin: int = 24) -> GrayImage:
    """Isolated single bright pixels on black, one FAST corner each."""
    width = 2 * margin + (cols - 1) * spacing + 1
    height = 2 * margin + (rows - 1) * spacing + 1
    px = np.zeros((height, width), dtype=np.uint8)
    for r in range(rows):
        for c in range(cols):
            px[margin + r * spacing, margin + c * spacing] = 255
    return GrayImage(px)


def make_skin_scene(width: int = 160, height: int = 120, seed: int = 3) -> RgbImage:
    """Two skin-colored ellipses on a green backdrop."""
    rng = np.random.default_rng(seed)
    px = np.empty((height, width, 3), dtype=np.uint8)
    px[...] = BACKDROP_RGB
    yy, xx = np.mgrid[0:height, 0:width]
    for cx in (0.35 * width, 0.65 * width):
        inside = ((xx - cx) / (0.15 * width)) ** 2 + ((yy - height / 2) / (0.35 * height)) ** 2 <= 1
        px[inside] = SKIN_RGB
    jitter = rng.integers(-2, 3, size=(height, width, 1))
    return RgbImage(np.clip(px.astype(int) + jitter, 0, 255).astype(np.uint8))
