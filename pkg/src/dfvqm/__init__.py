"""Full-reference video quality toolkit for frame-drop degradation.

Detects dropped frames in raw video, rebuilds a temporally aligned
corrected sequence, and scores spatial/temporal degradation with a single
index in [-1, 1]. Ships a distortion generator and an experiment harness.
"""

from .alignment import (
    Alignment,
    DiffMatrix,
    GAConfig,
    build_diff_matrix,
    chunks_from_missing,
    identify_dropped_frames,
    lis_of_best_indices,
    refine_with_ga,
)
from .correction import ConcealmentStrategy, construct_corrected
from .dfvqm_index import (
    ChunkContribution,
    QualityReport,
    VARIANT_FULL_CHUNK,
    VARIANT_LITERAL,
    dfvqmi,
    spatial_distortion,
    temporal_distortion,
)
from .distortion_lab import (
    DropPlan,
    SpatialSpec,
    classify_site,
    drop_frames,
    embed_bitplane,
    plan_drops,
)
from .errors import DfvqmError
from .frame_metrics import MetricConfig, mse, psnr, ssim
from .harness import ExperimentConfig, ScoreRow, correlate, run_experiment_grid, write_scores_csv
from .video_io import Frame, VideoSequence, read_raw_yuv, read_y4m, write_y4m

__version__ = "0.1.0"

__all__ = [
    "Alignment",
    "ChunkContribution",
    "ConcealmentStrategy",
    "DfvqmError",
    "DiffMatrix",
    "DropPlan",
    "ExperimentConfig",
    "Frame",
    "GAConfig",
    "MetricConfig",
    "QualityReport",
    "ScoreRow",
    "SpatialSpec",
    "VARIANT_FULL_CHUNK",
    "VARIANT_LITERAL",
    "VideoSequence",
    "build_diff_matrix",
    "chunks_from_missing",
    "classify_site",
    "construct_corrected",
    "correlate",
    "dfvqmi",
    "drop_frames",
    "embed_bitplane",
    "identify_dropped_frames",
    "lis_of_best_indices",
    "mse",
    "plan_drops",
    "psnr",
    "read_raw_yuv",
    "read_y4m",
    "refine_with_ga",
    "run_experiment_grid",
    "spatial_distortion",
    "ssim",
    "temporal_distortion",
    "write_scores_csv",
    "write_y4m",
]
