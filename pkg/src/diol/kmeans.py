"""Fixed-iteration K-Means training, nearest-centroid scoring and thresholding.

Training recipe:

1. take the chronological prefix ``ceil(train_fraction * n)`` of the feature
   records;
2. compute per-feature population mean/std over that prefix (zero spread is
   replaced by 1.0) and z-score the prefix;
3. seed the centroids with the first ``k`` scaled records;
4. run exactly ``iterations`` Lloyd rounds (no convergence exit; an empty
   cluster keeps its centroid);
5. take the nearest-rank ``percentile`` of the prefix distances to their
   nearest centroid and multiply it by ``scale``.

A record is anomalous when its distance is strictly greater than the
threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels
from .features import FEATURE_NAMES, FeatureTable, as_table

MIN_STD = 1e-12


class TrainingError(ValueError):
    pass


class NonFiniteFeature(ValueError):
    def __init__(self, index: int, timestamp_ms: int):
        super().__init__(f"non-finite feature value in record {index} (timestamp_ms={timestamp_ms})")
        self.index = index
        self.timestamp_ms = timestamp_ms


@dataclass(frozen=True)
class NormStats:
    mean: tuple[float, ...]
    std: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "mean", tuple(float(x) for x in self.mean))
        object.__setattr__(self, "std", tuple(float(x) for x in self.std))
        if len(self.mean) != len(self.std):
            raise ValueError("mean and std must have the same length")


@dataclass(frozen=True)
class TrainConfig:
    k: int = 3
    iterations: int = 3
    train_fraction: float = 0.20
    percentile: float = 95.0
    scale: float = 1.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if not 0.0 < self.train_fraction <= 1.0:
            raise ValueError("train_fraction must lie in (0, 1]")
        if not 0.0 < self.percentile <= 100.0:
            raise ValueError("percentile must lie in (0, 100]")
        if not self.scale > 0:
            raise ValueError("scale must be positive")


@dataclass(frozen=True)
class KMeansModel:
    """Everything needed to score records; immutable once built.

    ``threshold`` is the effective decision boundary (percentile distance
    already multiplied by ``scale``); ``scale`` is kept for provenance.
    """

    centroids: tuple[tuple[float, ...], ...]
    norm: NormStats
    threshold: float
    scale: float = 1.0
    feature_names: tuple[str, ...] = field(default=FEATURE_NAMES)

    def __post_init__(self):
        object.__setattr__(self, "centroids", tuple(tuple(float(x) for x in row) for row in self.centroids))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "threshold", float(self.threshold))
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def k(self) -> int:
        return len(self.centroids)

    @property
    def dim(self) -> int:
        return len(self.feature_names)

    def centroid_array(self) -> np.ndarray:
        return np.array(self.centroids, dtype=np.float64).reshape(self.k, -1)


class AnomalyVerdict(NamedTuple):
    timestamp_ms: int
    cluster: int
    distance: float
    is_anomaly: bool


class Verdicts:
    """Column-backed sequence of :class:`AnomalyVerdict`."""

    def __init__(self, timestamp_ms, cluster, distance, is_anomaly):
        self.timestamp_ms = np.asarray(timestamp_ms, dtype=np.int64)
        self.cluster = np.asarray(cluster, dtype=np.int64)
        self.distance = np.asarray(distance, dtype=np.float64)
        self.is_anomaly = np.asarray(is_anomaly, dtype=bool)

    def __len__(self):
        return len(self.timestamp_ms)

    def __getitem__(self, i):
        return AnomalyVerdict(
            int(self.timestamp_ms[i]), int(self.cluster[i]), float(self.distance[i]), bool(self.is_anomaly[i])
        )

    def __iter__(self):
        cols = (self.timestamp_ms.tolist(), self.cluster.tolist(), self.distance.tolist(), self.is_anomaly.tolist())
        for row in zip(*cols):
            yield AnomalyVerdict(*row)

    @property
    def flagged(self) -> int:
        return int(self.is_anomaly.sum())

    def __repr__(self):
        return f"Verdicts(n={len(self)}, flagged={self.flagged})"


def _check_finite(table: FeatureTable):
    bad = ~np.isfinite(table.values).all(axis=1)
    if bad.any():
        i = int(np.argmax(bad))
        raise NonFiniteFeature(i, int(table.timestamp_ms[i]))


def _ceil_share(x: float, n: int, denom: int = 1) -> int:
    # ceil(x * n / denom) on the decimal value of x, so 0.2 * 5 is exactly 1
    return math.ceil(Fraction(repr(float(x))) * n / denom)


def select_training_subset(features, fraction: float):
    """Chronological prefix of length ``ceil(fraction * n)``."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must lie in (0, 1]")
    n = len(features)
    return features[: _ceil_share(fraction, n)]


def compute_norm_stats(training) -> NormStats:
    table = as_table(training)
    if len(table) == 0:
        raise TrainingError("cannot compute normalization statistics of an empty set")
    mean, std = kernels.column_mean_std(table.values)
    std = np.where(std < MIN_STD, 1.0, std)
    return NormStats(mean.tolist(), std.tolist())


def normalize(v, stats: NormStats) -> np.ndarray:
    """z-score one feature vector (or an ``(n, dim)`` array of them)."""
    if isinstance(v, tuple) and hasattr(v, "_fields"):
        v = v[1:]
    return (np.asarray(v, dtype=np.float64) - np.asarray(stats.mean)) / np.asarray(stats.std)


def denormalize(z, stats: NormStats) -> np.ndarray:
    return np.asarray(z, dtype=np.float64) * np.asarray(stats.std) + np.asarray(stats.mean)


def init_centroids(scaled, k: int) -> np.ndarray:
    scaled = np.asarray(scaled, dtype=np.float64)
    if len(scaled) < k:
        raise TrainingError(f"need at least k={k} samples to seed centroids, got {len(scaled)}")
    return scaled[:k].copy()


def assign(z, centroids) -> tuple[int, float]:
    """Nearest centroid by Euclidean distance; ties go to the lowest index."""
    z = np.asarray(z, dtype=np.float64).reshape(1, -1)
    labels, dists = kernels.assign_points(z, np.asarray(centroids, dtype=np.float64))
    return int(labels[0]), float(dists[0])


def assign_all(scaled, centroids) -> tuple[np.ndarray, np.ndarray]:
    return kernels.assign_points(np.asarray(scaled, dtype=np.float64), np.asarray(centroids, dtype=np.float64))


def lloyd_iterate(scaled, centroids, iterations: int) -> np.ndarray:
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    cents = np.asarray(centroids, dtype=np.float64)
    if cents.ndim != 2 or len(cents) == 0:
        raise ValueError("centroids must be a non-empty (k, dim) array")
    scaled = np.asarray(scaled, dtype=np.float64).reshape(-1, cents.shape[1])
    return kernels.lloyd(scaled, cents, iterations)


def objective(scaled, centroids) -> float:
    """Within-cluster sum of squared distances under nearest assignment."""
    scaled = np.asarray(scaled, dtype=np.float64)
    cents = np.asarray(centroids, dtype=np.float64)
    labels, _ = assign_all(scaled, cents)
    return float(np.sum((scaled - cents[labels]) ** 2))


def compute_threshold(distances: Sequence[float], percentile: float, scale: float = 1.0) -> float:
    """Nearest-rank percentile (no interpolation) times ``scale``."""
    d = np.sort(np.asarray(distances, dtype=np.float64))
    n = len(d)
    if n == 0:
        raise TrainingError("cannot take a percentile of an empty distance list")
    if not 0.0 < percentile <= 100.0:
        raise ValueError("percentile must lie in (0, 100]")
    if not scale > 0:
        raise ValueError("scale must be positive")
    rank = min(max(_ceil_share(percentile, n, 100), 1), n)
    return float(d[rank - 1]) * scale


def train(features, cfg: TrainConfig = TrainConfig()) -> KMeansModel:
    table = as_table(features)
    subset = select_training_subset(table, cfg.train_fraction)
    if len(subset) < cfg.k:
        raise TrainingError(f"training subset has {len(subset)} records, fewer than k={cfg.k}")
    _check_finite(subset)
    stats = compute_norm_stats(subset)
    scaled = normalize(subset.values, stats)
    cents = lloyd_iterate(scaled, init_centroids(scaled, cfg.k), cfg.iterations)
    _, dists = assign_all(scaled, cents)
    threshold = compute_threshold(dists, cfg.percentile, cfg.scale)
    if not threshold > 0:
        raise TrainingError("degenerate threshold: every training distance is zero")
    return KMeansModel(
        centroids=cents.tolist(), norm=stats, threshold=threshold, scale=cfg.scale, feature_names=FEATURE_NAMES
    )


def infer(features, model: KMeansModel) -> Verdicts:
    table = as_table(features)
    _check_finite(table)
    scaled = normalize(table.values, model.norm)
    labels, dists = assign_all(scaled, model.centroid_array())
    return Verdicts(table.timestamp_ms, labels, dists, dists > model.threshold)
