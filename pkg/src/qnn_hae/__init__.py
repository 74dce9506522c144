"""Quadratic neurons, heterogeneous autoencoders, and reconstruction-based anomaly detection."""

__version__ = "0.1.0"

from .anomaly import auc, benchmark, score
from .data import Dataset, MinMaxNormalizer, load_csv
from .errors import QnnHaeError
from .estimator import HeterogeneousAutoencoderDetector
from .models import ModelKind, build_model, count_flops, count_params, model_forward
from .training import TrainConfig, train

__all__ = [
    "Dataset",
    "HeterogeneousAutoencoderDetector",
    "MinMaxNormalizer",
    "ModelKind",
    "QnnHaeError",
    "TrainConfig",
    "auc",
    "benchmark",
    "build_model",
    "count_flops",
    "count_params",
    "load_csv",
    "model_forward",
    "score",
    "train",
]
