"""Oriented FAST: segment-test corners, Harris ranking, intensity-centroid angle."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .image import GrayImage

TWO_PI = 2.0 * math.pi

# Radius-3 Bresenham circle, clockwise from 12 o'clock, as (dx, dy).
CIRCLE = (
    (0, -3), (1, -3), (2, -2), (3, -1),
    (3, 0), (3, 1), (2, 2), (1, 3),
    (0, 3), (-1, 3), (-2, 2), (-3, 1),
    (-3, 0), (-3, -1), (-2, -2), (-1, -3),
)  # fmt: skip
CIRCLE_RADIUS = 3


@dataclass(frozen=True)
class Keypoint:
    x: float
    y: float
    response: float = 0.0
    angle: float = 0.0


@dataclass(frozen=True)
class DetectorConfig:
    fast_threshold: int = 20
    arc_length: int = 9
    max_keypoints: int = 500
    harris_k: float = 0.04
    harris_radius: int = 3
    patch_radius: int = 15

    def __post_init__(self) -> None:
        if not 9 <= self.arc_length <= 16:
            raise ValueError(f"arc_length must be in [9, 16], got {self.arc_length}")
        if self.fast_threshold < 1:
            raise ValueError("fast_threshold must be >= 1")
        if self.max_keypoints < 1:
            raise ValueError("max_keypoints must be >= 1")
        if self.patch_radius < 4:
            raise ValueError("patch_radius must be >= 4")
        if self.harris_radius < 0 or self.harris_radius + 1 > self.patch_radius:
            raise ValueError("harris_radius must fit inside the keypoint patch")

    @property
    def min_image_side(self) -> int:
        return 2 * self.patch_radius + 7


# -- segment test ----------------------------------------------------------------


def _check_center(img: GrayImage, x: int, y: int, margin: int) -> None:
    if not (margin <= x < img.width - margin and margin <= y < img.height - margin):
        raise ValueError(
            f"({x}, {y}) is closer than {margin} px to the border of a "
            f"{img.width}x{img.height} image"
        )


def fast_segment_test(img: GrayImage, x: int, y: int, t: int, arc: int = 9) -> bool:
    """True iff ``arc`` contiguous circle pixels are all brighter than
    ``I(x, y) + t`` or all darker than ``I(x, y) - t`` (wrapping around)."""
    _check_center(img, x, y, CIRCLE_RADIUS)
    px = img.pixels
    c = int(px[y, x])
    ring = [int(px[y + dy, x + dx]) for dx, dy in CIRCLE]
    for sign in (1, -1):
        run = 0
        # Two laps so runs crossing index 0 are seen.
        for v in ring + ring:
            if sign * (v - c) > t:
                run += 1
                if run >= arc:
                    return True
            else:
                run = 0
    return False


def fast_score(img: GrayImage, x: int, y: int, arc: int = 9) -> int:
    """Largest threshold in [1, 255] at which the segment test still passes, else 0."""
    if not fast_segment_test(img, x, y, 1, arc):
        return 0
    lo, hi = 1, 255
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if fast_segment_test(img, x, y, mid, arc):
            lo = mid
        else:
            hi = mid - 1
    return lo


def _ring_stack(px: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Centers ``(H-6, W-6)`` and their 16 ring samples ``(16, H-6, W-6)`` as int16."""
    h, w = px.shape
    r = CIRCLE_RADIUS
    p = px.astype(np.int16)
    center = p[r : h - r, r : w - r]
    ring = np.stack([p[r + dy : h - r + dy, r + dx : w - r + dx] for dx, dy in CIRCLE])
    return center, ring


def _circular_window(stack: np.ndarray, arc: int, op: Callable) -> np.ndarray:
    """``out[s] = op-reduce(stack[(s + j) % 16] for j < arc)`` by window doubling."""
    out = None
    offset = 0
    power = stack
    span = 1
    remaining = arc
    while remaining:
        if remaining & 1:
            shifted = np.roll(power, -offset, axis=0)
            out = shifted if out is None else op(out, shifted)
            offset += span
        remaining >>= 1
        if remaining:
            power = op(power, np.roll(power, -span, axis=0))
            span *= 2
    return out


def segment_test_map(img: GrayImage, t: int, arc: int = 9) -> np.ndarray:
    """Boolean map of pixels passing the segment test; False within 3 px of the border."""
    px = img.pixels
    out = np.zeros(px.shape, dtype=bool)
    h, w = px.shape
    if h <= 2 * CIRCLE_RADIUS or w <= 2 * CIRCLE_RADIUS:
        return out
    center, ring = _ring_stack(px)
    bright = _circular_window(ring > center + t, arc, np.logical_and).any(axis=0)
    dark = _circular_window(ring < center - t, arc, np.logical_and).any(axis=0)
    out[CIRCLE_RADIUS:-CIRCLE_RADIUS, CIRCLE_RADIUS:-CIRCLE_RADIUS] = bright | dark
    return out


def fast_score_map(img: GrayImage, arc: int = 9) -> np.ndarray:
    """:func:`fast_score` at every pixel at once (0 near the border).

    The test passes at ``t`` iff some arc has minimum signed difference
    ``> t``, so the largest passing threshold is that best minimum minus one.
    """
    px = img.pixels
    out = np.zeros(px.shape, dtype=np.int16)
    h, w = px.shape
    if h <= 2 * CIRCLE_RADIUS or w <= 2 * CIRCLE_RADIUS:
        return out
    center, ring = _ring_stack(px)
    diff = ring - center
    best = np.maximum(
        _circular_window(diff, arc, np.minimum).max(axis=0),
        _circular_window(-diff, arc, np.minimum).max(axis=0),
    )
    out[CIRCLE_RADIUS:-CIRCLE_RADIUS, CIRCLE_RADIUS:-CIRCLE_RADIUS] = np.clip(best - 1, 0, 255)
    return out


def strict_local_maxima(score: np.ndarray) -> np.ndarray:
    """Pixels whose score is strictly greater than all 8 neighbours."""
    h, w = score.shape
    padded = np.pad(score, 1, mode="constant", constant_values=np.iinfo(score.dtype).min)
    keep = np.ones(score.shape, dtype=bool)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dx == 0 and dy == 0:
                continue
            keep &= score > padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
    return keep


def detect_fast(img: GrayImage, cfg: DetectorConfig = DetectorConfig(), nms: bool = True) -> list[Keypoint]:
    """FAST corners with 3x3 non-maximum suppression, sorted by ``(y, x)``.

    Keypoints closer than ``cfg.patch_radius`` to the border are dropped so
    that every returned point can be oriented and described.
    """
    side = cfg.min_image_side
    if img.width < side or img.height < side:
        raise ValueError(
            f"image is {img.width}x{img.height}; detection needs at least {side}x{side}"
        )
    passing = segment_test_map(img, cfg.fast_threshold, cfg.arc_length)
    score = np.where(passing, fast_score_map(img, cfg.arc_length), 0).astype(np.int16)
    keep = passing & strict_local_maxima(score) if nms else passing
    r = cfg.patch_radius
    interior = np.zeros_like(keep)
    interior[r : img.height - r, r : img.width - r] = True
    ys, xs = np.nonzero(keep & interior)
    return [
        Keypoint(float(x), float(y), float(score[y, x]), 0.0)
        for y, x in zip(ys.tolist(), xs.tolist())
    ]


# -- Harris ranking --------------------------------------------------------------


def _harris_from_sums(sxx, syy, sxy, k: float):
    det = sxx * syy - sxy * sxy
    tr = sxx + syy
    # Integer gradients are twice the central difference: scale by 2**-4.
    return (np.asarray(det, dtype=np.float64) - k * np.asarray(tr, dtype=np.float64) ** 2) / 16.0


def harris_response(img: GrayImage, x: int, y: int, window_radius: int = 3, k: float = 0.04) -> float:
    """``det(M) - k trace(M)^2`` of the structure tensor summed over the window.

    Gradients are central differences ``(I[x+1] - I[x-1]) / 2``.
    """
    _check_center(img, x, y, window_radius + 1)
    p = img.pixels.astype(np.int64)
    r = window_radius
    ys = slice(y - r, y + r + 1)
    xs = slice(x - r, x + r + 1)
    gx = p[ys, x - r + 1 : x + r + 2] - p[ys, x - r - 1 : x + r]
    gy = p[y - r + 1 : y + r + 2, xs] - p[y - r - 1 : y + r, xs]
    sxx = int((gx * gx).sum())
    syy = int((gy * gy).sum())
    sxy = int((gx * gy).sum())
    return float(_harris_from_sums(sxx, syy, sxy, k))


def harris_responses(
    img: GrayImage, points: Sequence[tuple[int, int]], window_radius: int = 3, k: float = 0.04
) -> np.ndarray:
    """Vectorized :func:`harris_response` at integer ``(x, y)`` points."""
    if len(points) == 0:
        return np.zeros(0)
    pts = np.asarray(points, dtype=np.int64).reshape(-1, 2)
    r = window_radius
    xs, ys = pts[:, 0], pts[:, 1]
    if (
        xs.min() < r + 1
        or ys.min() < r + 1
        or xs.max() > img.width - r - 2
        or ys.max() > img.height - r - 2
    ):
        raise ValueError("Harris window leaves the image")
    p = img.pixels.astype(np.int64)
    gx = np.zeros_like(p)
    gy = np.zeros_like(p)
    gx[:, 1:-1] = p[:, 2:] - p[:, :-2]
    gy[1:-1, :] = p[2:, :] - p[:-2, :]

    def window_sum(a: np.ndarray) -> np.ndarray:
        integral = np.zeros((a.shape[0] + 1, a.shape[1] + 1), dtype=np.int64)
        np.cumsum(np.cumsum(a, axis=0), axis=1, out=integral[1:, 1:])
        y0, y1 = ys - r, ys + r + 1
        x0, x1 = xs - r, xs + r + 1
        return integral[y1, x1] - integral[y0, x1] - integral[y1, x0] + integral[y0, x0]

    return _harris_from_sums(window_sum(gx * gx), window_sum(gy * gy), window_sum(gx * gy), k)


def select_top_n(
    kps: Sequence[Keypoint],
    img: GrayImage,
    n: int,
    harris_k: float = 0.04,
    window_radius: int = 3,
) -> list[Keypoint]:
    """Re-score by Harris response and keep the ``n`` strongest.

    Output is ordered by descending response, ties by ascending ``(y, x)``.
    """
    if n <= 0 or not kps:
        return []
    pts = [(int(round(k.x)), int(round(k.y))) for k in kps]
    resp = harris_responses(img, pts, window_radius, harris_k)
    rescored = [replace(k, response=float(r)) for k, r in zip(kps, resp)]
    rescored.sort(key=lambda k: (-k.response, k.y, k.x))
    return rescored[:n]


# -- orientation -----------------------------------------------------------------


def disc_offsets(radius: int) -> np.ndarray:
    """Integer ``(dx, dy)`` with ``dx^2 + dy^2 <= radius^2``, row-major."""
    d = np.arange(-radius, radius + 1)
    dy, dx = np.meshgrid(d, d, indexing="ij")
    inside = dx * dx + dy * dy <= radius * radius
    return np.stack([dx[inside], dy[inside]], axis=1)


def _angle(m10: int, m01: int) -> float:
    if m10 == 0 and m01 == 0:
        return 0.0
    a = math.atan2(m01, m10) % TWO_PI
    return 0.0 if a >= TWO_PI else a


def compute_orientation(img: GrayImage, kp: Keypoint, patch_radius: int = 15) -> float:
    """Intensity-centroid angle ``atan2(m01, m10)`` over a disc, in ``[0, 2pi)``."""
    x, y = int(round(kp.x)), int(round(kp.y))
    _check_center(img, x, y, patch_radius)
    offs = disc_offsets(patch_radius)
    vals = img.pixels[y + offs[:, 1], x + offs[:, 0]].astype(np.int64)
    return _angle(int((offs[:, 0] * vals).sum()), int((offs[:, 1] * vals).sum()))


def assign_orientations(img: GrayImage, kps: Sequence[Keypoint], patch_radius: int = 15) -> list[Keypoint]:
    if not kps:
        return []
    xy = np.array([(int(round(k.x)), int(round(k.y))) for k in kps], dtype=np.int64)
    r = patch_radius
    if (
        xy[:, 0].min() < r
        or xy[:, 1].min() < r
        or xy[:, 0].max() >= img.width - r
        or xy[:, 1].max() >= img.height - r
    ):
        raise ValueError("orientation patch leaves the image")
    offs = disc_offsets(r)
    vals = img.pixels[xy[:, 1, None] + offs[None, :, 1], xy[:, 0, None] + offs[None, :, 0]]
    vals = vals.astype(np.int64)
    m10 = vals @ offs[:, 0]
    m01 = vals @ offs[:, 1]
    return [replace(k, angle=_angle(int(a), int(b))) for k, a, b in zip(kps, m10, m01)]


def detect_oriented(img: GrayImage, cfg: DetectorConfig = DetectorConfig()) -> list[Keypoint]:
    """FAST, Harris top-N, then orientation: the full detector stage."""
    kps = detect_fast(img, cfg)
    kps = select_top_n(kps, img, cfg.max_keypoints, cfg.harris_k, cfg.harris_radius)
    return assign_orientations(img, kps, cfg.patch_radius)
