"""Raster containers and the pixel operations applied before detection.

Coordinates are ``(x, y)`` = (column, row) with the origin at the top-left
pixel. All images are 8-bit; rounding is half-up throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np


def _round_half_up(values: np.ndarray) -> np.ndarray:
    return np.floor(values + 0.5)


def _to_u8(values: np.ndarray) -> np.ndarray:
    return np.clip(_round_half_up(values), 0, 255).astype(np.uint8)


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Row-major 8-bit luminance raster, shape ``(height, width)``."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ValueError(f"GrayImage needs a 2-D array, got shape {px.shape}")
        if px.shape[0] == 0 or px.shape[1] == 0:
            raise ValueError("GrayImage dimensions must be positive")
        if px.dtype != np.uint8:
            if px.size and (px.min() < 0 or px.max() > 255):
                raise ValueError("GrayImage values must lie in [0, 255]")
            px = px.astype(np.uint8)
        px = np.ascontiguousarray(px)
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, GrayImage) and np.array_equal(self.pixels, other.pixels)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class RgbImage:
    """Row-major 8-bit RGB raster, shape ``(height, width, 3)``."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"RgbImage needs an (H, W, 3) array, got shape {px.shape}")
        if px.shape[0] == 0 or px.shape[1] == 0:
            raise ValueError("RgbImage dimensions must be positive")
        if px.dtype != np.uint8:
            if px.size and (px.min() < 0 or px.max() > 255):
                raise ValueError("RgbImage values must lie in [0, 255]")
            px = px.astype(np.uint8)
        px = np.ascontiguousarray(px)
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RgbImage) and np.array_equal(self.pixels, other.pixels)

    __hash__ = None  # type: ignore[assignment]


Image = Union[GrayImage, RgbImage]


@dataclass(frozen=True, eq=False)
class SkinMask:
    bits: np.ndarray

    def __post_init__(self) -> None:
        bits = np.ascontiguousarray(np.asarray(self.bits, dtype=bool))
        if bits.ndim != 2:
            raise ValueError("SkinMask needs a 2-D boolean array")
        bits.flags.writeable = False
        object.__setattr__(self, "bits", bits)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def fraction(self) -> float:
        return float(self.bits.mean()) if self.bits.size else 0.0

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SkinMask) and np.array_equal(self.bits, other.bits)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class SkinThresholds:
    """Inclusive chroma box classified as skin."""

    cb_min: int = 77
    cb_max: int = 127
    cr_min: int = 133
    cr_max: int = 173

    def __post_init__(self) -> None:
        for name in ("cb_min", "cb_max", "cr_min", "cr_max"):
            v = getattr(self, name)
            if not 0 <= v <= 255:
                raise ValueError(f"{name}={v} outside [0, 255]")
        if self.cb_min > self.cb_max or self.cr_min > self.cr_max:
            raise ValueError("threshold minimum exceeds maximum")


# -- color ---------------------------------------------------------------------


def rgb_to_gray(img: RgbImage) -> GrayImage:
    rgb = img.pixels.astype(np.float64)
    y = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return GrayImage(_to_u8(y))


def ycbcr_planes(rgb: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """BT.601 full-range conversion of an ``(..., 3)`` array to three uint8 planes."""
    rgb = np.asarray(rgb, dtype=np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b
    cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b
    return _to_u8(y), _to_u8(cb), _to_u8(cr)


def rgb_to_ycbcr(r: int, g: int, b: int) -> tuple[int, int, int]:
    for v in (r, g, b):
        if not 0 <= v <= 255:
            raise ValueError(f"channel value {v} outside [0, 255]")
    y, cb, cr = ycbcr_planes(np.array([r, g, b]))
    return int(y), int(cb), int(cr)


def as_gray(img: Image) -> GrayImage:
    return img if isinstance(img, GrayImage) else rgb_to_gray(img)


def as_rgb(img: Image) -> RgbImage:
    if isinstance(img, RgbImage):
        return img
    return RgbImage(np.repeat(img.pixels[:, :, None], 3, axis=2))


# -- segmentation --------------------------------------------------------------


def skin_mask(img: RgbImage, th: SkinThresholds = SkinThresholds()) -> SkinMask:
    _, cb, cr = ycbcr_planes(img.pixels)
    bits = (cb >= th.cb_min) & (cb <= th.cb_max) & (cr >= th.cr_min) & (cr <= th.cr_max)
    return SkinMask(bits)


def apply_mask(img: RgbImage, mask: SkinMask, fill: tuple[int, int, int] = (0, 0, 0)) -> RgbImage:
    """Keep pixels under the mask and paint the rest with ``fill``."""
    if (mask.width, mask.height) != (img.width, img.height):
        raise ValueError(
            f"mask is {mask.width}x{mask.height} but image is {img.width}x{img.height}"
        )
    out = np.empty_like(img.pixels)
    out[...] = np.asarray(fill, dtype=np.uint8)
    out[mask.bits] = img.pixels[mask.bits]
    return RgbImage(out)


# -- geometry ------------------------------------------------------------------

_ROTATION_STEPS = {"identity": 0, "rot90cw": 1, "rot180": 2, "rot90ccw": 3}
_STEP_KINDS = {v: k for k, v in _ROTATION_STEPS.items()}


@dataclass(frozen=True)
class Transform2D:
    """Point/image transform.

    The exact rotation kinds (``identity``, ``rot90cw``, ``rot180``,
    ``rot90ccw``) depend on the source dimensions; ``affine`` carries an
    explicit 2x3 matrix in pixel units.
    """

    kind: str = "identity"
    matrix: tuple[tuple[float, float, float], tuple[float, float, float]] | None = field(
        default=None
    )

    def __post_init__(self) -> None:
        if self.kind == "affine":
            if self.matrix is None:
                raise ValueError("affine transform needs a 2x3 matrix")
            m = np.asarray(self.matrix, dtype=np.float64)
            if m.shape != (2, 3):
                raise ValueError(f"affine matrix must be 2x3, got {m.shape}")
            object.__setattr__(self, "matrix", tuple(tuple(float(v) for v in row) for row in m))
        elif self.kind not in _ROTATION_STEPS:
            raise ValueError(f"unknown transform kind {self.kind!r}")

    @classmethod
    def identity(cls) -> Transform2D:
        return cls("identity")

    @classmethod
    def rot90cw(cls) -> Transform2D:
        return cls("rot90cw")

    @classmethod
    def rot90ccw(cls) -> Transform2D:
        return cls("rot90ccw")

    @classmethod
    def rot180(cls) -> Transform2D:
        return cls("rot180")

    @property
    def is_exact_rotation(self) -> bool:
        return self.kind in _ROTATION_STEPS

    def compose(self, then: Transform2D) -> Transform2D:
        """Rotation applying ``self`` first and ``then`` second."""
        if not (self.is_exact_rotation and then.is_exact_rotation):
            raise ValueError("compose is defined for the exact rotation kinds only")
        steps = (_ROTATION_STEPS[self.kind] + _ROTATION_STEPS[then.kind]) % 4
        return Transform2D(_STEP_KINDS[steps])

    def inverse(self) -> Transform2D:
        if not self.is_exact_rotation:
            m = np.vstack([np.asarray(self.matrix), [0.0, 0.0, 1.0]])
            inv = np.linalg.inv(m)[:2]
            return Transform2D("affine", tuple(map(tuple, inv)))
        return Transform2D(_STEP_KINDS[(-_ROTATION_STEPS[self.kind]) % 4])

    def dst_dims(self, src_dims: tuple[int, int]) -> tuple[int, int]:
        w, h = src_dims
        if self.kind in ("rot90cw", "rot90ccw"):
            return h, w
        return w, h

    def affine(self, src_dims: tuple[int, int]) -> np.ndarray:
        """2x3 matrix mapping source ``(x, y, 1)`` to destination ``(x, y)``."""
        w, h = src_dims
        if self.kind == "affine":
            return np.asarray(self.matrix, dtype=np.float64)
        return np.array(
            {
                "identity": [[1, 0, 0], [0, 1, 0]],
                "rot90cw": [[0, -1, h - 1], [1, 0, 0]],
                "rot180": [[-1, 0, w - 1], [0, -1, h - 1]],
                "rot90ccw": [[0, 1, 0], [-1, 0, w - 1]],
            }[self.kind],
            dtype=np.float64,
        )


def transform_point(
    t: Transform2D, p: tuple[float, float], src_dims: tuple[int, int]
) -> tuple[float, float]:
    """Map ``p`` from source to destination pixel coordinates (unclamped)."""
    x, y = p
    w, h = src_dims
    if t.kind == "identity":
        return x, y
    if t.kind == "rot90cw":
        return h - 1 - y, x
    if t.kind == "rot90ccw":
        return y, w - 1 - x
    if t.kind == "rot180":
        return w - 1 - x, h - 1 - y
    m = t.affine(src_dims)
    return (
        m[0, 0] * x + m[0, 1] * y + m[0, 2],
        m[1, 0] * x + m[1, 1] * y + m[1, 2],
    )


def transform_points(t: Transform2D, pts: np.ndarray, src_dims: tuple[int, int]) -> np.ndarray:
    """Vectorized :func:`transform_point` over an ``(n, 2)`` array."""
    pts = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
    m = t.affine(src_dims)
    return pts @ m[:, :2].T + m[:, 2]


def rotate90(img: Image, direction: str = "cw") -> Image:
    """Lossless quarter-turn. ``direction`` is ``"cw"`` or ``"ccw"``."""
    if direction == "cw":
        k = -1
    elif direction == "ccw":
        k = 1
    else:
        raise ValueError(f"direction must be 'cw' or 'ccw', got {direction!r}")
    return type(img)(np.rot90(img.pixels, k=k, axes=(0, 1)))


def apply_transform(img: Image, t: Transform2D) -> Image:
    """Apply an exact rotation kind to an image."""
    if not t.is_exact_rotation:
        raise ValueError("only exact 90-degree rotation kinds can be applied to images")
    steps = _ROTATION_STEPS[t.kind]
    if steps == 0:
        return img
    return type(img)(np.rot90(img.pixels, k=-steps, axes=(0, 1)))


# -- smoothing -----------------------------------------------------------------


def box_blur_array(pixels: np.ndarray, radius: int) -> np.ndarray:
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius == 0:
        return np.array(pixels, dtype=np.uint8, copy=True)
    size = 2 * radius + 1
    padded = np.pad(pixels.astype(np.int64), radius, mode="edge")
    integral = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1), dtype=np.int64)
    np.cumsum(np.cumsum(padded, axis=0), axis=1, out=integral[1:, 1:])
    h, w = pixels.shape
    total = (
        integral[size : size + h, size : size + w]
        - integral[:h, size : size + w]
        - integral[size : size + h, :w]
        + integral[:h, :w]
    )
    n = size * size
    return ((total + n // 2) // n).astype(np.uint8)


def box_blur(img: GrayImage, radius: int) -> GrayImage:
    """Rounded mean over a ``(2r+1)^2`` window with replicated borders."""
    return GrayImage(box_blur_array(img.pixels, radius))
