"""``featmatch`` command line: segment, detect, match, evaluate, rotate, fixture."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .descriptor import DEFAULT_SEED, extract_descriptors, generate_pattern
from .detect import DetectorConfig, detect_oriented
from .draw import DrawConfig, draw_matches
from .evaluation import EvalReport, ExperimentSpec, format_table, load_pair, run_experiment, run_pipeline
from .fixtures import make_dot_grid, make_skin_scene, make_textured
from .image import (
    RgbImage,
    SkinThresholds,
    Transform2D,
    apply_mask,
    apply_transform,
    as_gray,
    skin_mask,
)
from .io import (
    FormatError,
    descriptors_to_text,
    keypoints_to_csv,
    keypoints_to_json,
    matches_to_csv,
    read_image,
    write_image,
    write_mask,
)
from .matcher import ABSOLUTE, LOWE_RATIO, MatchFilterConfig

log = logging.getLogger("featmatch")

SEED_ENV = "FEATMATCH_SEED"


class UsageError(Exception):
    """Contradictory or invalid flags."""


def default_seed() -> int:
    value = os.environ.get(SEED_ENV)
    if value is None:
        return DEFAULT_SEED
    try:
        return int(value)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={value!r} is not an integer") from None


def _emit(args, summary: dict, text: str) -> None:
    if args.json:
        print(json.dumps(summary, sort_keys=True))
    else:
        print(text)


def _write_text(path: Optional[str], text: str) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8", newline="\n")


def _thresholds(args) -> SkinThresholds:
    return SkinThresholds(args.cb_min, args.cb_max, args.cr_min, args.cr_max)


def _detector(args) -> DetectorConfig:
    return DetectorConfig(
        fast_threshold=args.detector_threshold,
        arc_length=args.arc_length,
        max_keypoints=args.max_keypoints,
        harris_k=args.harris_k,
        patch_radius=args.patch_radius,
    )


def _filter(args) -> MatchFilterConfig:
    return MatchFilterConfig(args.filter_mode, args.filter_threshold)


def _seed(args) -> int:
    return args.seed if args.seed is not None else default_seed()


# -- commands --------------------------------------------------------------------


def cmd_segment(args) -> int:
    img = read_image(args.input)
    if not isinstance(img, RgbImage):
        raise UsageError("segmentation needs a color (PPM/PNG) image")
    mask = skin_mask(img, _thresholds(args))
    if args.mask_out:
        write_mask(args.mask_out, mask)
    if args.foreground_out:
        write_image(args.foreground_out, apply_mask(img, mask))
    pct = 100.0 * mask.fraction()
    _emit(args, {"skin_pct": round(pct, 6), "width": mask.width, "height": mask.height},
          f"skin pixels: {pct:.2f}%")
    return 0


def cmd_detect(args) -> int:
    seed = _seed(args)
    cfg = _detector(args)
    img = read_image(args.input)
    if args.segment:
        if not isinstance(img, RgbImage):
            raise UsageError("--segment needs a color image")
        img = apply_mask(img, skin_mask(img, _thresholds(args)))
    gray = as_gray(img)
    kps = detect_oriented(gray, cfg)
    pattern = generate_pattern(seed, cfg.patch_radius)
    desc = extract_descriptors(gray, kps, pattern, not args.no_steer, args.blur_radius)
    _write_text(args.keypoints_json, keypoints_to_json(kps))
    _write_text(args.keypoints_csv, keypoints_to_csv(kps))
    _write_text(args.descriptors_out, descriptors_to_text(desc, seed))
    _emit(args, {"keypoints": len(kps), "seed": seed}, f"keypoints: {len(kps)}")
    return 0


def cmd_match(args) -> int:
    spec = ExperimentSpec(
        image1=args.image1,
        image2=args.image2,
        transform=None,
        detector=_detector(args),
        steered=not args.no_steer,
        cross_check=args.cross_check,
        filter=_filter(args),
        seed=_seed(args),
        blur_radius=args.blur_radius,
        segment=args.segment,
        thresholds=_thresholds(args),
        timing_repeats=1,
    )
    g1, g2 = load_pair(spec)
    res = run_pipeline(g1, g2, spec)
    _write_text(args.matches_out, matches_to_csv(res.kept))
    _write_text(args.all_matches_out, matches_to_csv(res.matches))
    if args.draw_out:
        vis = draw_matches(g1, res.kps1, g2, res.kps2, res.matches, DrawConfig(top_k=args.draw_top))
        write_image(args.draw_out, vis)
    summary = {
        "keypoints_1": len(res.kps1),
        "keypoints_2": len(res.kps2),
        "total_matches": len(res.matches),
        "kept_matches": len(res.kept),
    }
    _emit(args, summary, f"total matches: {len(res.matches)}\nkept matches: {len(res.kept)}")
    return 0


_TRANSFORMS = {
    "identity": Transform2D.identity,
    "rot90cw": Transform2D.rot90cw,
    "rot90ccw": Transform2D.rot90ccw,
    "rot180": Transform2D.rot180,
}


def cmd_evaluate(args) -> int:
    if args.transform == "second-image":
        if not args.second_image:
            raise UsageError("--transform second-image needs --second-image")
        transform = None
    else:
        if args.second_image:
            raise UsageError(
                f"--second-image contradicts --transform {args.transform}; "
                "use --transform second-image"
            )
        transform = _TRANSFORMS[args.transform]()
    modes = [True, False] if args.both_modes else [args.steering == "on"]
    reports = []
    for steered in modes:
        spec = ExperimentSpec(
            image1=args.input,
            image2=args.second_image,
            transform=transform,
            detector=_detector(args),
            steered=steered,
            cross_check=args.cross_check,
            filter=_filter(args),
            eps=args.eps,
            seed=_seed(args),
            blur_radius=args.blur_radius,
            segment=args.segment,
            thresholds=_thresholds(args),
            timing_repeats=args.repeats,
        )
        reports.append(run_experiment(spec))

    # Report files hold only deterministic fields; timings go to their own file.
    stable = [
        EvalReport.from_dict({**r.to_dict(), "timings": {}, "timing_runs": []}) for r in reports
    ]
    if args.report_out:
        payload = stable[0].to_dict() if len(stable) == 1 else [r.to_dict() for r in stable]
        _write_text(args.report_out, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    if args.timings_out:
        timings = {r.label: {"best_ms": r.timings, "runs_ms": r.timing_runs} for r in reports}
        _write_text(args.timings_out, json.dumps(timings, indent=2, sort_keys=True) + "\n")
    table = format_table(reports)
    _write_text(args.table_out, table)
    if args.json:
        print(json.dumps([r.to_dict() for r in reports], sort_keys=True))
    else:
        print(table, end="")
        for r in reports:
            t = r.timings
            print(
                f"{r.label}: detect {t['detect']:.1f} ms, describe {t['describe']:.1f} ms, "
                f"match {t['match']:.1f} ms (best of {args.repeats})"
            )
    return 0


def cmd_rotate(args) -> int:
    kind = {"cw": "rot90cw", "ccw": "rot90ccw", "180": "rot180"}[args.direction]
    img = read_image(args.input)
    out = apply_transform(img, Transform2D(kind))
    write_image(args.output, out)
    _emit(args, {"width": out.width, "height": out.height}, f"wrote {out.width}x{out.height} image")
    return 0


def cmd_fixture(args) -> int:
    if args.kind == "textured":
        img = make_textured(args.width, args.height, args.fixture_seed)
    elif args.kind == "dots":
        img = make_dot_grid(args.rows, args.cols)
    else:
        img = make_skin_scene(args.width, args.height, args.fixture_seed)
    write_image(args.output, img)
    _emit(args, {"width": img.width, "height": img.height}, f"wrote {img.width}x{img.height} {args.kind} fixture")
    return 0


# -- parser ----------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--json", action="store_true", help="machine-readable stdout summary")
    p.add_argument("--verbose", "-v", action="store_true")


def _add_skin(p: argparse.ArgumentParser) -> None:
    d = SkinThresholds()
    p.add_argument("--cb-min", type=int, default=d.cb_min)
    p.add_argument("--cb-max", type=int, default=d.cb_max)
    p.add_argument("--cr-min", type=int, default=d.cr_min)
    p.add_argument("--cr-max", type=int, default=d.cr_max)


def _add_detector(p: argparse.ArgumentParser) -> None:
    d = DetectorConfig()
    p.add_argument("--detector-threshold", type=int, default=d.fast_threshold)
    p.add_argument("--arc-length", type=int, default=d.arc_length)
    p.add_argument("--max-keypoints", type=int, default=d.max_keypoints)
    p.add_argument("--harris-k", type=float, default=d.harris_k)
    p.add_argument("--patch-radius", type=int, default=d.patch_radius)
    p.add_argument("--blur-radius", type=int, default=2)
    p.add_argument("--seed", type=int, default=None, help=f"pattern seed (default ${SEED_ENV} or {DEFAULT_SEED})")
    p.add_argument("--segment", action="store_true", help="mask non-skin pixels before detection")
    _add_skin(p)


def _add_matching(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cross-check", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--filter-mode", choices=(ABSOLUTE, LOWE_RATIO), default=ABSOLUTE)
    p.add_argument("--filter-threshold", type=float, default=0.7)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="featmatch", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="YCbCr skin mask and foreground")
    p.add_argument("input")
    p.add_argument("--mask-out")
    p.add_argument("--foreground-out")
    _add_skin(p)
    _add_common(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("detect", help="keypoints and descriptors for one image")
    p.add_argument("input")
    p.add_argument("--keypoints-json")
    p.add_argument("--keypoints-csv")
    p.add_argument("--descriptors-out")
    p.add_argument("--no-steer", action="store_true", help="plain BRIEF, ignore orientation")
    _add_detector(p)
    _add_common(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("match", help="match two images and draw the best matches")
    p.add_argument("image1")
    p.add_argument("image2")
    p.add_argument("--matches-out", help="CSV of matches passing the filter")
    p.add_argument("--all-matches-out", help="CSV of all sorted matches")
    p.add_argument("--draw-out", help="visualization (.ppm or .png)")
    p.add_argument("--draw-top", type=int, default=10)
    p.add_argument("--no-steer", action="store_true")
    _add_detector(p)
    _add_matching(p)
    _add_common(p)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("evaluate", help="accuracy/precision table under a known transform")
    p.add_argument("input")
    p.add_argument("--transform", choices=(*_TRANSFORMS, "second-image"), default="rot90cw")
    p.add_argument("--second-image")
    p.add_argument("--steering", choices=("on", "off"), default="on")
    p.add_argument("--both-modes", action="store_true", help="run steered and unsteered rows")
    p.add_argument("--eps", type=float, default=2.0)
    p.add_argument("--repeats", type=int, default=3, help="timing runs (best is reported)")
    p.add_argument("--report-out")
    p.add_argument("--table-out")
    p.add_argument("--timings-out")
    _add_detector(p)
    _add_matching(p)
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("rotate", help="exact 90/180 degree rotation")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--direction", choices=("cw", "ccw", "180"), default="cw")
    _add_common(p)
    p.set_defaults(func=cmd_rotate)

    p = sub.add_parser("fixture", help="write a synthetic test image")
    p.add_argument("kind", choices=("textured", "dots", "skin"))
    p.add_argument("output")
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--height", type=int, default=512)
    p.add_argument("--rows", type=int, default=4)
    p.add_argument("--cols", type=int, default=5)
    p.add_argument("--fixture-seed", type=int, default=7)
    _add_common(p)
    p.set_defaults(func=cmd_fixture)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"featmatch {args.command}: {exc}", file=sys.stderr)
        return 2
    except (OSError, FormatError, ValueError, IndexError) as exc:
        print(f"featmatch {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
