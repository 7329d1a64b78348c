import math

import numpy as np
import pytest

import oracles
from featmatch.detect import (
    DetectorConfig,
    Keypoint,
    assign_orientations,
    compute_orientation,
    detect_fast,
    fast_score,
    fast_score_map,
    fast_segment_test,
    harris_response,
    harris_responses,
    segment_test_map,
    select_top_n,
)
from featmatch.image import GrayImage, Transform2D, rotate90, transform_point


def dot_image(size=41, value=255, at=None):
    px = np.zeros((size, size), dtype=np.uint8)
    y, x = at or (size // 2, size // 2)
    px[y, x] = value
    return GrayImage(px)


def angle_diff(a, b):
    d = (a - b) % (2 * math.pi)
    return min(d, 2 * math.pi - d)


def test_config_validation():
    with pytest.raises(ValueError):
        DetectorConfig(arc_length=8)
    with pytest.raises(ValueError):
        DetectorConfig(fast_threshold=0)
    with pytest.raises(ValueError):
        DetectorConfig(max_keypoints=0)


# -- segment test ----------------------------------------------------------------


def test_segment_test_examples():
    const = GrayImage(np.full((9, 9), 77, dtype=np.uint8))
    assert not fast_segment_test(const, 4, 4, 20)
    assert fast_segment_test(dot_image(9), 4, 4, 20)
    with pytest.raises(ValueError):
        fast_segment_test(const, 2, 4, 20)


def test_segment_test_wraps_around():
    px = np.full((7, 7), 100, dtype=np.uint8)
    # Bright run over ring indices 12..15 and 0..4: nine pixels across the seam.
    for dx, dy in [oracles.RING[i] for i in (12, 13, 14, 15, 0, 1, 2, 3, 4)]:
        px[3 + dy, 3 + dx] = 200
    img = GrayImage(px)
    assert fast_segment_test(img, 3, 3, 20, 9)
    assert not fast_segment_test(img, 3, 3, 20, 10)


@pytest.mark.parametrize("t, arc", [(10, 9), (20, 9), (35, 12), (5, 16)])
def test_segment_map_matches_oracle(t, arc):
    rng = np.random.default_rng(t * 31 + arc)
    for _ in range(3):
        px = rng.integers(0, 256, size=(32, 32), dtype=np.uint8)
        img = GrayImage(px)
        got = segment_test_map(img, t, arc)
        want = oracles.segment_map(px, t, arc)
        assert np.array_equal(got, want)
        for y, x in zip(*np.nonzero(want[3:-3:5, 3:-3:5])):
            assert fast_segment_test(img, 3 + 5 * x, 3 + 5 * y, t, arc)


def test_fast_score_examples():
    assert fast_score(dot_image(9), 4, 4) == 254
    assert oracles.score_linear(dot_image(9).pixels, 4, 4, 9) == 254
    assert fast_score(GrayImage(np.full((9, 9), 50, dtype=np.uint8)), 4, 4) == 0


def test_fast_score_monotone_as_center_brightens():
    scores = []
    for center in range(0, 201, 10):
        px = np.zeros((9, 9), dtype=np.uint8)
        for i, (dx, dy) in enumerate(oracles.RING):
            px[4 + dy, 4 + dx] = 200 if i < 12 else 0
        px[4, 4] = center
        img = GrayImage(px)
        s = fast_score(img, 4, 4)
        assert s == oracles.score_linear(px, 4, 4, 9)
        scores.append(s)
    assert scores[0] == 199
    assert all(a >= b for a, b in zip(scores, scores[1:]))


def test_score_map_equals_scalar_score():
    rng = np.random.default_rng(5)
    for _ in range(3):
        img = GrayImage(rng.integers(0, 256, size=(16, 16), dtype=np.uint8))
        smap = fast_score_map(img)
        for y in range(3, 13):
            for x in range(3, 13):
                assert smap[y, x] == fast_score(img, x, y)


# -- detection -------------------------------------------------------------------


def test_detect_constant_and_dot():
    assert detect_fast(GrayImage(np.full((40, 40), 9, dtype=np.uint8))) == []
    kps = detect_fast(dot_image(41))
    assert [(k.x, k.y, k.response) for k in kps] == [(20.0, 20.0, 254.0)]
    assert detect_fast(dot_image(41, at=(5, 5))) == []


def test_detect_too_small_names_minimum():
    with pytest.raises(ValueError, match="37x37"):
        detect_fast(GrayImage(np.zeros((36, 60), dtype=np.uint8)))


def brute_detect(px, cfg):
    h, w = px.shape
    r = cfg.patch_radius
    passing = oracles.segment_map(px, cfg.fast_threshold, cfg.arc_length)
    score = np.zeros((h, w), dtype=int)
    for y, x in zip(*np.nonzero(passing)):
        score[y, x] = oracles.score_linear(px, x, y, cfg.arc_length)
    out = []
    for y in range(r, h - r):
        for x in range(r, w - r):
            if not passing[y, x]:
                continue
            nb = [score[y + dy, x + dx] for dy in (-1, 0, 1) for dx in (-1, 0, 1) if dx or dy]
            if all(score[y, x] > v for v in nb):
                out.append((float(x), float(y), float(score[y, x])))
    return out


def test_detect_matches_brute_force():
    rng = np.random.default_rng(6)
    cfg = DetectorConfig(fast_threshold=40, patch_radius=8)
    for _ in range(2):
        px = rng.integers(0, 256, size=(40, 40), dtype=np.uint8)
        got = [(k.x, k.y, k.response) for k in detect_fast(GrayImage(px), cfg)]
        assert got == brute_detect(px, cfg)


def test_detect_nms_and_recheck(textured):
    cfg = DetectorConfig()
    kps = detect_fast(textured, cfg)
    assert len(kps) > 100
    assert [(k.y, k.x) for k in kps] == sorted((k.y, k.x) for k in kps)
    pts = {(int(k.x), int(k.y)) for k in kps}
    for x, y in pts:
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                if dx or dy:
                    assert (x + dx, y + dy) not in pts
    for k in kps[::7]:
        assert fast_segment_test(textured, int(k.x), int(k.y), cfg.fast_threshold)


def test_detect_is_rotation_equivariant(textured):
    cfg = DetectorConfig()
    dims = (textured.width, textured.height)
    before = {
        transform_point(Transform2D.rot90cw(), (k.x, k.y), dims): k.response
        for k in detect_fast(textured, cfg)
    }
    after = {(k.x, k.y): k.response for k in detect_fast(rotate90(textured, "cw"), cfg)}
    assert before == after


# -- Harris ----------------------------------------------------------------------


def test_harris_constant_and_edge():
    const = GrayImage(np.full((15, 15), 120, dtype=np.uint8))
    assert harris_response(const, 7, 7) == 0.0
    px = np.zeros((15, 15), dtype=np.uint8)
    px[:, 8:] = 200
    assert harris_response(GrayImage(px), 7, 7) < 0
    with pytest.raises(ValueError):
        harris_response(const, 3, 7, window_radius=3)


def test_harris_corner_matches_eigenvalues():
    px = np.zeros((21, 21), dtype=np.uint8)
    px[:10, :10] = 180
    px[10:, 10:] = 180
    noise = np.random.default_rng(7).integers(0, 20, size=px.shape)
    px = (px + noise).astype(np.uint8)
    img = GrayImage(px)
    for k in (0.04, 0.06):
        got = harris_response(img, 10, 10, 3, k)
        want = oracles.harris_eigen(px, 10, 10, 3, k)
        assert got > 0
        assert got == pytest.approx(want, rel=1e-9)


def test_harris_batch_equals_scalar():
    rng = np.random.default_rng(8)
    img = GrayImage(rng.integers(0, 256, size=(30, 30), dtype=np.uint8))
    pts = [(x, y) for x in range(4, 26, 3) for y in range(5, 26, 4)]
    batch = harris_responses(img, pts, 3, 0.04)
    assert batch.tolist() == [harris_response(img, x, y, 3, 0.04) for x, y in pts]


def graded_corners():
    px = np.zeros((60, 160), dtype=np.uint8)
    kps = []
    for i in range(10):
        x0 = 10 + 15 * i
        px[20:40, x0 : x0 + 8] = 20 + 20 * i
        kps.append(Keypoint(float(x0), 20.0))
    return GrayImage(px), kps


def test_select_top_n():
    img, kps = graded_corners()
    assert select_top_n(kps, img, 0) == []
    all_kps = select_top_n(kps, img, 50)
    assert len(all_kps) == 10
    assert all(k.response == harris_response(img, int(k.x), int(k.y)) for k in all_kps)
    ranked = sorted(kps, key=lambda k: -oracles.harris_eigen(img.pixels, int(k.x), int(k.y), 3, 0.04))
    top = select_top_n(kps, img, 3)
    assert [k.x for k in top] == [k.x for k in ranked[:3]]
    assert {k.x for k in top} == {10.0 + 15 * i for i in (7, 8, 9)}
    assert select_top_n(kps[::-1], img, 3) == top


def test_select_top_n_ties_by_position():
    img = GrayImage(np.zeros((20, 20), dtype=np.uint8))
    kps = [Keypoint(9.0, 9.0), Keypoint(5.0, 9.0), Keypoint(7.0, 4.0)]
    assert [(k.x, k.y) for k in select_top_n(kps, img, 2)] == [(7.0, 4.0), (5.0, 9.0)]


# -- orientation -----------------------------------------------------------------


def test_orientation_symmetric_patch_is_zero():
    yy, xx = np.mgrid[0:41, 0:41]
    px = (255 - 6 * np.hypot(xx - 20, yy - 20)).clip(0, 255).astype(np.uint8)
    assert compute_orientation(GrayImage(px), Keypoint(20, 20), 15) == 0.0


def test_orientation_ramps():
    ramp = np.tile(np.arange(41, dtype=np.uint8) * 5, (41, 1))
    assert compute_orientation(GrayImage(ramp), Keypoint(20, 20), 15) == 0.0
    assert compute_orientation(GrayImage(ramp.T), Keypoint(20, 20), 15) == pytest.approx(math.pi / 2)
    with pytest.raises(ValueError):
        compute_orientation(GrayImage(ramp), Keypoint(10, 20), 15)


def test_orientation_rotates_with_patch():
    rng = np.random.default_rng(9)
    px = rng.integers(0, 256, size=(41, 41), dtype=np.uint8)
    img = GrayImage(px)
    a = compute_orientation(img, Keypoint(20, 20), 15)
    b = compute_orientation(rotate90(img, "cw"), Keypoint(20, 20), 15)
    assert angle_diff(b, (a + math.pi / 2) % (2 * math.pi)) < 0.05


def test_assign_orientations_matches_scalar(textured):
    kps = detect_fast(textured)[:60]
    batch = assign_orientations(textured, kps, 15)
    for k, kb in zip(kps, batch):
        assert 0.0 <= kb.angle < 2 * math.pi
        assert kb.angle == compute_orientation(textured, k, 15)
