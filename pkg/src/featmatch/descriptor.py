"""Steered BRIEF: seeded sampling pattern, 256-bit descriptors, Hamming metric.

Descriptors are ``uint8`` arrays of 32 octets; bit ``k`` lives in bit
``k % 8`` of octet ``k // 8``. A list of descriptors is an ``(n, 32)`` array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .detect import Keypoint
from .image import GrayImage, box_blur_array

N_BITS = 256
N_BYTES = N_BITS // 8
DEFAULT_SEED = 42
DEFAULT_ORIENTATION_BINS = 32


@dataclass(frozen=True, eq=False)
class SamplingPattern:
    """``pairs[k] = ((x1, y1), (x2, y2))`` relative to the patch centre."""

    pairs: np.ndarray
    seed: int
    patch_radius: int

    def __post_init__(self) -> None:
        pairs = np.ascontiguousarray(np.asarray(self.pairs, dtype=np.int64))
        if pairs.ndim != 3 or pairs.shape[1:] != (2, 2):
            raise ValueError(f"pairs must have shape (n, 2, 2), got {pairs.shape}")
        pairs.flags.writeable = False
        object.__setattr__(self, "pairs", pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SamplingPattern) and np.array_equal(self.pairs, other.pairs)

    __hash__ = None  # type: ignore[assignment]


def generate_pattern(seed: int = DEFAULT_SEED, patch_radius: int = 15, n_pairs: int = N_BITS) -> SamplingPattern:
    """Integer point pairs from an isotropic Gaussian (sigma = patch_radius / 2).

    Samples come from numpy's PCG64 generator seeded with ``seed``; points
    outside the disc of radius ``patch_radius - 2`` and degenerate pairs
    (both points equal) are rejected and redrawn.
    """
    if patch_radius < 4:
        raise ValueError("patch_radius must be >= 4")
    rng = np.random.Generator(np.random.PCG64(seed))
    sigma = patch_radius / 2.0
    limit = (patch_radius - 2) ** 2
    accepted: list[np.ndarray] = []
    count = 0
    while count < n_pairs:
        batch = np.floor(rng.normal(0.0, sigma, size=(n_pairs, 2, 2)) + 0.5).astype(np.int64)
        inside = ((batch**2).sum(axis=2) <= limit).all(axis=1)
        distinct = (batch[:, 0] != batch[:, 1]).any(axis=1)
        good = batch[inside & distinct]
        accepted.append(good)
        count += len(good)
    pairs = np.concatenate(accepted)[:n_pairs]
    return SamplingPattern(pairs, seed, patch_radius)


def orientation_bin(angle: float, n_bins: int = DEFAULT_ORIENTATION_BINS) -> int:
    return int(round(angle / (2.0 * math.pi / n_bins))) % n_bins


def _rotate_pairs(pairs: np.ndarray, bin_index: int, n_bins: int) -> np.ndarray:
    theta = bin_index * 2.0 * math.pi / n_bins
    c, s = math.cos(theta), math.sin(theta)
    x, y = pairs[..., 0], pairs[..., 1]
    out = np.stack([c * x - s * y, s * x + c * y], axis=-1)
    return np.rint(out).astype(np.int64)


def steer_pattern(p: SamplingPattern, angle: float, n_bins: int = DEFAULT_ORIENTATION_BINS) -> SamplingPattern:
    """Rotate every point by ``angle`` snapped to the nearest of ``n_bins``
    orientations, rounding to integer pixels."""
    b = orientation_bin(angle, n_bins)
    if b == 0:
        return p
    return SamplingPattern(_rotate_pairs(p.pairs, b, n_bins), p.seed, p.patch_radius)


def _sample_bits(smoothed: np.ndarray, centers: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """``offsets`` is ``(n, pairs, 2, 2)``; returns packed ``(n, pairs / 8)``."""
    xs = centers[:, None, None, 0] + offsets[..., 0]
    ys = centers[:, None, None, 1] + offsets[..., 1]
    h, w = smoothed.shape
    if xs.size and (xs.min() < 0 or ys.min() < 0 or xs.max() >= w or ys.max() >= h):
        raise ValueError("descriptor patch leaves the image")
    vals = smoothed[ys, xs]
    bits = vals[..., 0] < vals[..., 1]
    return np.packbits(bits, axis=1, bitorder="little")


def extract_descriptors(
    img: GrayImage,
    kps: Sequence[Keypoint],
    pattern: SamplingPattern,
    steered: bool = True,
    blur_radius: int = 2,
    n_bins: int = DEFAULT_ORIENTATION_BINS,
) -> np.ndarray:
    """Descriptors for all keypoints, shape ``(len(kps), 32)``.

    Bit ``k`` is 1 iff the smoothed intensity at the first point of pair
    ``k`` is strictly less than at the second.
    """
    n_bytes = len(pattern) // 8
    if not kps:
        return np.zeros((0, n_bytes), dtype=np.uint8)
    smoothed = box_blur_array(img.pixels, blur_radius)
    centers = np.array([(int(round(k.x)), int(round(k.y))) for k in kps], dtype=np.int64)
    if steered:
        bins = np.array([orientation_bin(k.angle, n_bins) for k in kps])
        table = np.stack([_rotate_pairs(pattern.pairs, b, n_bins) for b in range(n_bins)])
        offsets = table[bins]
    else:
        offsets = np.broadcast_to(pattern.pairs, (len(kps),) + pattern.pairs.shape)
    return _sample_bits(smoothed, centers, offsets)


def extract_descriptor(
    img: GrayImage,
    kp: Keypoint,
    pattern: SamplingPattern,
    steered: bool = True,
    blur_radius: int = 2,
    n_bins: int = DEFAULT_ORIENTATION_BINS,
) -> np.ndarray:
    smoothed = box_blur_array(img.pixels, blur_radius)
    pat = steer_pattern(pattern, kp.angle, n_bins) if steered else pattern
    center = np.array([[int(round(kp.x)), int(round(kp.y))]], dtype=np.int64)
    return _sample_bits(smoothed, center, pat.pairs[None])[0]


# -- bits and distances ----------------------------------------------------------


def pack_bits(bits: Sequence[int] | np.ndarray) -> np.ndarray:
    bits = np.asarray(bits, dtype=bool)
    if bits.shape[-1] % 8:
        raise ValueError("bit count must be a multiple of 8")
    return np.packbits(bits, axis=-1, bitorder="little")


def unpack_bits(desc: np.ndarray) -> np.ndarray:
    return np.unpackbits(np.asarray(desc, dtype=np.uint8), axis=-1, bitorder="little")


def hamming_distance(a: np.ndarray, b: np.ndarray) -> int:
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    if a.shape != b.shape:
        raise ValueError(f"descriptor shapes differ: {a.shape} vs {b.shape}")
    return int(np.bitwise_count(np.bitwise_xor(a, b)).sum())


def hamming_matrix(query: np.ndarray, train: np.ndarray) -> np.ndarray:
    """All pairwise distances, ``(n, m)`` int32."""
    q = np.ascontiguousarray(query, dtype=np.uint8)
    t = np.ascontiguousarray(train, dtype=np.uint8)
    if q.ndim != 2 or t.ndim != 2 or q.shape[1] != t.shape[1]:
        raise ValueError(f"descriptor length mismatch: {q.shape} vs {t.shape}")
    if len(q) == 0 or len(t) == 0:
        return np.zeros((len(q), len(t)), dtype=np.int32)
    if q.shape[1] % 8 == 0:
        q = q.view(np.uint64)
        t = t.view(np.uint64)
    x = np.bitwise_xor(q[:, None, :], t[None, :, :])
    return np.bitwise_count(x).sum(axis=2, dtype=np.int32)
