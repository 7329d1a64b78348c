import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from featmatch.descriptor import (
    SamplingPattern,
    extract_descriptor,
    extract_descriptors,
    generate_pattern,
    hamming_distance,
    hamming_matrix,
    orientation_bin,
    pack_bits,
    steer_pattern,
    unpack_bits,
)
from featmatch.detect import Keypoint, assign_orientations, detect_oriented
from featmatch.image import GrayImage, Transform2D, rotate90, transform_point

desc_bytes = st.binary(min_size=32, max_size=32).map(lambda b: np.frombuffer(b, dtype=np.uint8))


def test_pattern_deterministic_and_bounded():
    a = generate_pattern(42, 15)
    assert a == generate_pattern(42, 15)
    assert len(a) == 256
    assert ((a.pairs**2).sum(axis=2) <= 13**2).all()
    assert (a.pairs[:, 0] != a.pairs[:, 1]).any(axis=1).all()
    assert generate_pattern(0, 15) != generate_pattern(1, 15)
    with pytest.raises(ValueError):
        generate_pattern(0, 3)


def test_steer_examples():
    p = SamplingPattern(np.array([[[3, 4], [-2, 5]], [[0, 0], [7, -1]]]), seed=0, patch_radius=15)
    assert steer_pattern(p, 0.0) == p
    assert steer_pattern(p, math.pi).pairs.tolist() == [[[-3, -4], [2, -5]], [[0, 0], [-7, 1]]]
    big = generate_pattern(42, 15)
    quarter = steer_pattern(big, math.pi / 2).pairs
    x, y = big.pairs[..., 0], big.pairs[..., 1]
    assert np.array_equal(quarter, np.stack([-y, x], axis=-1))


def test_steer_quantizes_to_bins():
    p = generate_pattern(42, 15)
    step = 2 * math.pi / 32
    assert steer_pattern(p, 0.4 * step) == p
    assert steer_pattern(p, 1.4 * step) == steer_pattern(p, step)
    assert orientation_bin(2 * math.pi - 0.1 * step) == 0
    steered = steer_pattern(p, 5 * step)
    assert (np.hypot(steered.pairs[..., 0], steered.pairs[..., 1]) < 15).all()


def test_extract_constant_image_gives_zero_bits():
    img = GrayImage(np.full((40, 40), 111, dtype=np.uint8))
    d = extract_descriptor(img, Keypoint(20, 20, angle=1.0), generate_pattern())
    assert d.shape == (32,) and not d.any()


def test_extract_inverted_image_complements():
    pattern = generate_pattern(42, 15)
    rng = np.random.default_rng(10)
    kp = Keypoint(20, 20)
    while True:
        px = rng.integers(0, 256, size=(41, 41), dtype=np.uint8)
        a = px[20 + pattern.pairs[:, 0, 1], 20 + pattern.pairs[:, 0, 0]]
        b = px[20 + pattern.pairs[:, 1, 1], 20 + pattern.pairs[:, 1, 0]]
        if (a != b).all():
            break
    d = extract_descriptor(GrayImage(px), kp, pattern, steered=False, blur_radius=0)
    inv = extract_descriptor(GrayImage(255 - px), kp, pattern, steered=False, blur_radius=0)
    assert np.array_equal(inv, ~d)
    assert hamming_distance(d, inv) == 256


def test_extract_deterministic_and_consistent(textured):
    pattern = generate_pattern()
    kps = detect_oriented(textured)[:40]
    batch = extract_descriptors(textured, kps, pattern, steered=True)
    again = extract_descriptors(textured, kps, pattern, steered=True)
    assert np.array_equal(batch, again)
    for k, row in zip(kps, batch):
        assert np.array_equal(extract_descriptor(textured, k, pattern), row)
    flat = [Keypoint(k.x, k.y, k.response, 0.0) for k in kps]
    assert np.array_equal(
        extract_descriptors(textured, flat, pattern, steered=True),
        extract_descriptors(textured, flat, pattern, steered=False),
    )
    assert extract_descriptors(textured, [], pattern).shape == (0, 32)


def test_extract_out_of_bounds():
    img = GrayImage(np.zeros((40, 40), dtype=np.uint8))
    with pytest.raises(ValueError):
        extract_descriptor(img, Keypoint(3, 20), generate_pattern())


def test_bit_packing_convention():
    bits = np.zeros(256, dtype=np.uint8)
    bits[9] = 1
    packed = pack_bits(bits)
    assert packed[1] == 2 and packed.sum() == 2
    rng = np.random.default_rng(11)
    for _ in range(20):
        b = rng.integers(0, 2, size=256, dtype=np.uint8)
        assert np.array_equal(unpack_bits(pack_bits(b)), b)


def test_hamming_examples():
    a = np.random.default_rng(12).integers(0, 256, size=32, dtype=np.uint8)
    assert hamming_distance(a, a) == 0
    assert hamming_distance(a, ~a) == 256
    with pytest.raises(ValueError):
        hamming_distance(a, a[:16])


@given(desc_bytes, desc_bytes, desc_bytes)
def test_hamming_metric_properties(a, b, c):
    dab = hamming_distance(a, b)
    assert dab == oracles.bit_loop_hamming(a, b)
    assert dab == hamming_distance(b, a)
    assert (dab == 0) == np.array_equal(a, b)
    assert hamming_distance(a, c) <= dab + hamming_distance(b, c)


def test_hamming_matrix_matches_pairwise():
    rng = np.random.default_rng(13)
    q = rng.integers(0, 256, size=(7, 32), dtype=np.uint8)
    t = rng.integers(0, 256, size=(5, 32), dtype=np.uint8)
    m = hamming_matrix(q, t)
    assert m.tolist() == oracles.distance_matrix(q, t)
    with pytest.raises(ValueError):
        hamming_matrix(q, t[:, :16])


def test_steering_gives_rotation_invariance(textured):
    """Descriptors at corresponding points of the image and its quarter turn."""
    pattern = generate_pattern()
    rotated = rotate90(textured, "cw")
    dims = (textured.width, textured.height)
    kps = detect_oriented(textured)
    mapped = [Keypoint(*transform_point(Transform2D.rot90cw(), (k.x, k.y), dims)) for k in kps]
    mapped = assign_orientations(rotated, mapped, 15)
    dist = {}
    for steered in (True, False):
        d1 = extract_descriptors(textured, kps, pattern, steered)
        d2 = extract_descriptors(rotated, mapped, pattern, steered)
        dist[steered] = np.array([hamming_distance(a, b) for a, b in zip(d1, d2)])
    assert (dist[True] <= 64).mean() >= 0.9
    assert np.median(dist[False]) > np.median(dist[True])
