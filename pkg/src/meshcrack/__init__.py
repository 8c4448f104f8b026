"""Crack artifact detection for rendered snapshots of 3D textured meshes.

The detector compares a distorted render against its reference and returns a
per-pixel crack likelihood map. The map can be averaged into a standalone
crack artifact score or turned into pooling weights that emphasise cracked
pixels when reducing a classical quality map (SSIM, GMS, squared error) to a
single score.
"""

__version__ = "0.1.0"

from .errors import (
    DimensionError,
    EmptyObjectError,
    FitError,
    MeshCrackError,
    ParameterError,
    UndefinedCorrelationError,
)
from .evaluation import evaluate, logistic_fit, plcc, read_manifest, srcc
from .frames import list_sequence, read_frame
from .integration import (
    CropRect,
    enhanced_frame_score,
    object_bounding_box,
    score_frame,
    score_sequence,
    sequence_score,
    weight_map,
    weighted_pool,
)
from .pcd import PcdConfig, ablation_variants, compute_crack_map, crack_artifact_score
from .qa_models import Polarity, QualityMap, gms_map, squared_error_map, ssim_map

__all__ = [
    "CropRect",
    "DimensionError",
    "EmptyObjectError",
    "FitError",
    "MeshCrackError",
    "ParameterError",
    "PcdConfig",
    "Polarity",
    "QualityMap",
    "UndefinedCorrelationError",
    "ablation_variants",
    "compute_crack_map",
    "crack_artifact_score",
    "enhanced_frame_score",
    "evaluate",
    "gms_map",
    "list_sequence",
    "logistic_fit",
    "object_bounding_box",
    "plcc",
    "read_frame",
    "read_manifest",
    "score_frame",
    "score_sequence",
    "sequence_score",
    "squared_error_map",
    "srcc",
    "ssim_map",
    "weight_map",
    "weighted_pool",
]
