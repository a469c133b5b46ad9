"""K-Means anomaly detection on appliance current traces, with a portable
text model format for train-once/share-everywhere reuse across devices."""

from .features import FeatureConfig, FeatureTable, FeatureVector, extract_features
from .kernels import BACKEND as KERNEL_BACKEND
from .kmeans import AnomalyVerdict, KMeansModel, NormStats, TrainConfig, infer, train
from .model_format import ParseError, parse, serialize
from .signal import SignalConfig, cleanse, compute_rms_windows, parse_sample_csv

__version__ = "0.1.0"

__all__ = [
    "AnomalyVerdict",
    "FeatureConfig",
    "FeatureTable",
    "FeatureVector",
    "KERNEL_BACKEND",
    "KMeansModel",
    "NormStats",
    "ParseError",
    "SignalConfig",
    "TrainConfig",
    "cleanse",
    "compute_rms_windows",
    "extract_features",
    "infer",
    "parse",
    "parse_sample_csv",
    "serialize",
    "train",
]
