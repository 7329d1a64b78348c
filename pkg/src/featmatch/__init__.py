"""From-scratch oriented FAST + steered BRIEF feature matching."""

from .descriptor import (
    SamplingPattern,
    extract_descriptor,
    extract_descriptors,
    generate_pattern,
    hamming_distance,
    hamming_matrix,
    steer_pattern,
)
from .detect import (
    DetectorConfig,
    Keypoint,
    compute_orientation,
    detect_fast,
    detect_oriented,
    fast_score,
    fast_segment_test,
    harris_response,
    select_top_n,
)
from .evaluation import (
    EvalReport,
    ExperimentSpec,
    accuracy_score,
    ground_truth_correct,
    repeatability,
    run_experiment,
)
from .image import (
    GrayImage,
    RgbImage,
    SkinMask,
    SkinThresholds,
    Transform2D,
    apply_mask,
    box_blur,
    rgb_to_gray,
    rgb_to_ycbcr,
    rotate90,
    skin_mask,
    transform_point,
)
from .matcher import Match, MatchFilterConfig, filter_matches, knn_match, match_brute_force, sort_matches

__version__ = "0.1.0"
