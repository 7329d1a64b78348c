"""Ground-truth scoring of matches under a known transform and the experiment runner."""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .descriptor import DEFAULT_ORIENTATION_BINS, DEFAULT_SEED, extract_descriptors, generate_pattern
from .detect import DetectorConfig, Keypoint, detect_oriented
from .image import (
    GrayImage,
    Image,
    RgbImage,
    SkinThresholds,
    Transform2D,
    apply_mask,
    apply_transform,
    as_gray,
    skin_mask,
    transform_point,
    transform_points,
)
from .matcher import LOWE_RATIO, Match, MatchFilterConfig, filter_matches, knn_match, match_brute_force, sort_matches

log = logging.getLogger(__name__)

ImageSource = Union[str, Path, GrayImage, RgbImage]


def ground_truth_correct(
    m: Match,
    kps1: Sequence[Keypoint],
    kps2: Sequence[Keypoint],
    t: Transform2D,
    eps: float,
    src_dims: tuple[int, int],
) -> bool:
    """True iff the transformed query keypoint lands within ``eps`` px of the train keypoint."""
    k1 = kps1[m.query_idx]
    k2 = kps2[m.train_idx]
    x, y = transform_point(t, (k1.x, k1.y), src_dims)
    return math.hypot(x - k2.x, y - k2.y) <= eps


def accuracy_score(n_correct: int, n_total: int) -> float:
    """``100 * correct / total``; 0.0 when there are no matches."""
    if n_correct < 0 or n_total < 0:
        raise ValueError("counts must be non-negative")
    if n_correct > n_total:
        raise ValueError(f"{n_correct} correct matches out of only {n_total}")
    if n_total == 0:
        return 0.0
    return 100.0 * n_correct / n_total


def repeatability(
    kps1: Sequence[Keypoint],
    kps2: Sequence[Keypoint],
    t: Transform2D,
    eps: float,
    src_dims: tuple[int, int],
    dst_dims: Optional[tuple[int, int]] = None,
    margin: float = 0.0,
) -> float:
    """Percentage of image-1 keypoints that reappear within ``eps`` in image 2.

    Only keypoints whose transformed position falls inside image 2 (shrunk by
    ``margin``) count toward the denominator; an empty denominator gives 0.0.
    """
    if dst_dims is None:
        dst_dims = t.dst_dims(src_dims)
    if not kps1:
        return 0.0
    mapped = transform_points(t, [(k.x, k.y) for k in kps1], src_dims)
    w, h = dst_dims
    visible = (
        (mapped[:, 0] >= margin)
        & (mapped[:, 0] <= w - 1 - margin)
        & (mapped[:, 1] >= margin)
        & (mapped[:, 1] <= h - 1 - margin)
    )
    n_visible = int(visible.sum())
    if n_visible == 0 or not kps2:
        return 0.0
    other = np.array([(k.x, k.y) for k in kps2], dtype=np.float64)
    found = 0
    for p in mapped[visible]:
        d2 = ((other - p) ** 2).sum(axis=1)
        if d2.min() <= eps * eps:
            found += 1
    return 100.0 * found / n_visible


# -- experiment ------------------------------------------------------------------


@dataclass
class ExperimentSpec:
    """One row of the comparison table.

    When ``image2`` is omitted it is produced by applying ``transform`` to
    ``image1``. When both are given, ``transform`` (if any) is only the
    ground truth used for geometric scoring.
    """

    image1: ImageSource
    image2: Optional[ImageSource] = None
    transform: Optional[Transform2D] = field(default_factory=Transform2D.rot90cw)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    steered: bool = True
    cross_check: bool = True
    filter: MatchFilterConfig = field(default_factory=MatchFilterConfig)
    eps: float = 2.0
    seed: int = DEFAULT_SEED
    blur_radius: int = 2
    orientation_bins: int = DEFAULT_ORIENTATION_BINS
    segment: bool = False
    thresholds: SkinThresholds = field(default_factory=SkinThresholds)
    timing_repeats: int = 3
    label: str = ""

    def __post_init__(self) -> None:
        if self.eps <= 0:
            raise ValueError("reprojection tolerance eps must be > 0")
        if self.timing_repeats < 1:
            raise ValueError("timing_repeats must be >= 1")
        if self.image2 is None and self.transform is None:
            raise ValueError("need either a second image or a transform to produce one")
        if self.image2 is None and not self.transform.is_exact_rotation:
            raise ValueError("only exact 90-degree rotations can generate the second image")
        if not self.label:
            self.label = "steered" if self.steered else "unsteered"


def _r6(v: float) -> float:
    return round(float(v), 6)


@dataclass
class EvalReport:
    label: str
    n_keypoints_1: int
    n_keypoints_2: int
    n_total_matches: int
    n_filter_correct: int
    n_geometric_correct: Optional[int]
    n_filter_geometric_correct: Optional[int]
    accuracy_pct: float
    precision_pct: Optional[float]
    repeatability_pct: Optional[float]
    timings: dict[str, float]
    timing_runs: list[dict[str, float]] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not 0 <= self.n_filter_correct <= self.n_total_matches:
            raise ValueError("filter-correct count outside [0, total]")
        if self.n_geometric_correct is not None and not 0 <= self.n_geometric_correct <= self.n_total_matches:
            raise ValueError("geometric-correct count outside [0, total]")
        self.accuracy_pct = _r6(self.accuracy_pct)
        if self.precision_pct is not None:
            self.precision_pct = _r6(self.precision_pct)
        if self.repeatability_pct is not None:
            self.repeatability_pct = _r6(self.repeatability_pct)
        self.timings = {k: _r6(v) for k, v in self.timings.items()}
        self.timing_runs = [{k: _r6(v) for k, v in run.items()} for run in self.timing_runs]

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> EvalReport:
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> EvalReport:
        return cls.from_dict(json.loads(text))


@dataclass
class PipelineResult:
    kps1: list[Keypoint]
    kps2: list[Keypoint]
    desc1: np.ndarray
    desc2: np.ndarray
    matches: list[Match]  # sorted by distance
    kept: list[Match]  # filter survivors, still sorted
    timings: dict[str, float]


def _load(src: ImageSource) -> Image:
    if isinstance(src, (GrayImage, RgbImage)):
        return src
    from .io import read_image

    return read_image(src)


def _prepare(img: Image, spec: ExperimentSpec) -> GrayImage:
    if spec.segment:
        if not isinstance(img, RgbImage):
            raise ValueError("skin segmentation needs a color image")
        img = apply_mask(img, skin_mask(img, spec.thresholds))
    return as_gray(img)


def load_pair(spec: ExperimentSpec) -> tuple[GrayImage, GrayImage]:
    first = _prepare(_load(spec.image1), spec)
    if spec.image2 is None:
        second = apply_transform(first, spec.transform)
    else:
        second = _prepare(_load(spec.image2), spec)
    return first, second


def run_pipeline(g1: GrayImage, g2: GrayImage, spec: ExperimentSpec) -> PipelineResult:
    """Detect, orient, describe, match, sort and filter once, timing each stage."""
    pattern = generate_pattern(spec.seed, spec.detector.patch_radius)
    timings = {}

    t0 = time.perf_counter()
    kps1 = detect_oriented(g1, spec.detector)
    kps2 = detect_oriented(g2, spec.detector)
    t1 = time.perf_counter()
    d1 = extract_descriptors(g1, kps1, pattern, spec.steered, spec.blur_radius, spec.orientation_bins)
    d2 = extract_descriptors(g2, kps2, pattern, spec.steered, spec.blur_radius, spec.orientation_bins)
    t2 = time.perf_counter()
    matches = sort_matches(match_brute_force(d1, d2, spec.cross_check))
    knn = None
    if spec.filter.mode == LOWE_RATIO:
        knn = knn_match(d1, d2, 2) if len(d2) >= 2 else []
    kept = filter_matches(matches, spec.filter, knn)
    t3 = time.perf_counter()

    timings["detect"] = (t1 - t0) * 1e3
    timings["describe"] = (t2 - t1) * 1e3
    timings["match"] = (t3 - t2) * 1e3
    return PipelineResult(kps1, kps2, d1, d2, matches, kept, timings)


def run_experiment(spec: ExperimentSpec) -> EvalReport:
    """Run the full pipeline on an image pair and score it.

    Stage timings are the best of ``spec.timing_repeats`` runs; every run is
    logged and kept in ``timing_runs``.
    """
    start = time.perf_counter()
    g1, g2 = load_pair(spec)
    runs = []
    result = None
    for i in range(spec.timing_repeats):
        result = run_pipeline(g1, g2, spec)
        runs.append(result.timings)
        log.info("run %d/%d timings (ms): %s", i + 1, spec.timing_repeats, result.timings)
    best = {stage: min(r[stage] for r in runs) for stage in runs[0]}

    flags = []
    kps1, kps2, matches, kept = result.kps1, result.kps2, result.matches, result.kept
    if not kps1 or not kps2:
        flags.append("no-keypoints")
    if not matches:
        flags.append("no-matches")

    src_dims = (g1.width, g1.height)
    n_geo = n_geo_kept = precision = repeat = None
    if spec.transform is not None:
        correct = {
            (m.query_idx, m.train_idx)
            for m in matches
            if ground_truth_correct(m, kps1, kps2, spec.transform, spec.eps, src_dims)
        }
        n_geo = len(correct)
        n_geo_kept = sum((m.query_idx, m.train_idx) in correct for m in kept)
        precision = accuracy_score(n_geo, len(matches))
        dst_dims = (g2.width, g2.height)
        margin = spec.detector.patch_radius
        repeat = repeatability(kps1, kps2, spec.transform, spec.eps, src_dims, dst_dims, margin)
        if not kps1:
            flags.append("no-repeatability-support")
    else:
        flags.append("no-ground-truth")

    best["total"] = (time.perf_counter() - start) * 1e3
    return EvalReport(
        label=spec.label,
        n_keypoints_1=len(kps1),
        n_keypoints_2=len(kps2),
        n_total_matches=len(matches),
        n_filter_correct=len(kept),
        n_geometric_correct=n_geo,
        n_filter_geometric_correct=n_geo_kept,
        accuracy_pct=accuracy_score(len(kept), len(matches)),
        precision_pct=precision,
        repeatability_pct=repeat,
        timings=best,
        timing_runs=runs,
        flags=flags,
    )


TABLE_COLUMNS = ("Descriptor", "KP1", "KP2", "Correct", "Total", "Accuracy%", "Precision%", "Repeat%")


def format_table(reports: Sequence[EvalReport]) -> str:
    """Aligned plain-text table, one row per report."""

    def pct(v: Optional[float]) -> str:
        return "n/a" if v is None else f"{v:.1f}"

    rows = [TABLE_COLUMNS] + [
        (
            r.label,
            str(r.n_keypoints_1),
            str(r.n_keypoints_2),
            str(r.n_filter_correct),
            str(r.n_total_matches),
            pct(r.accuracy_pct),
            pct(r.precision_pct),
            pct(r.repeatability_pct),
        )
        for r in reports
    ]
    widths = [max(len(row[i]) for row in rows) for i in range(len(TABLE_COLUMNS))]
    lines = []
    for n, row in enumerate(rows):
        cells = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
        lines.append(" | ".join(cells))
        if n == 0:
            lines.append("-+-".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
