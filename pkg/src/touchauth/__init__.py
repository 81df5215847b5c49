"""Continuous authentication from touchscreen strokes.

Hot kernels (SMO solver, k-d tree query) run under numba when it is
installed; set ``TOUCHAUTH_DISABLE_NUMBA=1`` to force the numpy versions.
"""
from ._accel import backend
from .classify import KdTree, KnnModel, Standardizer, SvmModel, UserModel, train_user_model
from .dataset import FeatureTable
from .evaluate import ExperimentConfig, build_report, run_experiment, score_experiment
from .features import FEATURE_NAMES, FeatureVector, extract_features
from .ingest import ScreenSpec, Stroke, TouchEvent, load_strokes, parse_log, segment_strokes
from .metrics import eer, roc_and_eer

__version__ = "0.1.0"

__all__ = [
    "FEATURE_NAMES",
    "ExperimentConfig",
    "FeatureTable",
    "FeatureVector",
    "KdTree",
    "KnnModel",
    "ScreenSpec",
    "Standardizer",
    "Stroke",
    "SvmModel",
    "TouchEvent",
    "UserModel",
    "backend",
    "build_report",
    "eer",
    "extract_features",
    "load_strokes",
    "parse_log",
    "roc_and_eer",
    "run_experiment",
    "score_experiment",
    "segment_strokes",
    "train_user_model",
]
