"""Budgeted voxel-centric active-learning engine for LiDAR segmentation.

Selects one voxel per scan per round under a points- or voxels-per-scan
budget, reveals labels through a simulated or live oracle, retrains a
small point classifier between rounds, and records everything in a
resumable journal.
"""

from .errors import (
    AnnotatorError,
    ConfigError,
    CorruptPointError,
    EmptyTrainingSetError,
    IntegrityError,
    MalformedFileError,
    UsageError,
)
from .journal import Journal, JournalEntry
from .lidar_io import (
    ClassMap,
    LabelSet,
    PointCloud,
    builtin_class_map,
    load_class_map,
    read_labels,
    read_points,
    write_labels,
    write_points,
)
from .learner import ToyModel, featurize, fit, predict_proba
from .loop import (
    CampaignConfig,
    CampaignEngine,
    Scan,
    SimulatedOracle,
    cold_start_policy,
    run_campaign,
)
from .report import class_frequencies, compute_accuracy, compute_miou, emit_report
from .strategies import (
    Predictions,
    VoxelScore,
    point_entropy,
    point_margin,
    pseudo_labels,
    read_predictions,
    score_entropy,
    score_margin,
    score_vcd,
    select_voxel,
    write_predictions,
)
from .voxelgrid import VoxelIndex, build_index, voxel_of

__version__ = "0.1.0"

__all__ = [
    "AnnotatorError",
    "CampaignConfig",
    "CampaignEngine",
    "ClassMap",
    "ConfigError",
    "CorruptPointError",
    "EmptyTrainingSetError",
    "IntegrityError",
    "Journal",
    "JournalEntry",
    "LabelSet",
    "MalformedFileError",
    "PointCloud",
    "Predictions",
    "Scan",
    "SimulatedOracle",
    "ToyModel",
    "UsageError",
    "VoxelIndex",
    "VoxelScore",
    "builtin_class_map",
    "class_frequencies",
    "cold_start_policy",
    "compute_accuracy",
    "compute_miou",
    "emit_report",
    "featurize",
    "fit",
    "load_class_map",
    "point_entropy",
    "point_margin",
    "predict_proba",
    "pseudo_labels",
    "read_labels",
    "read_points",
    "read_predictions",
    "run_campaign",
    "score_entropy",
    "score_margin",
    "score_vcd",
    "select_voxel",
    "voxel_of",
    "build_index",
    "write_labels",
    "write_points",
    "write_predictions",
]
