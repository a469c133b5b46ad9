"""Z-Score baseline detector.

Shares the chronological training prefix and normalization statistics with
the K-Means trainer; a record is flagged when its largest absolute feature
z-score exceeds ``z_threshold``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import as_table
from .kmeans import (
    NormStats,
    TrainingError,
    Verdicts,
    _check_finite,
    compute_norm_stats,
    normalize,
    select_training_subset,
)


@dataclass(frozen=True)
class ZScoreModel:
    norm: NormStats
    z_threshold: float = 3.0

    def __post_init__(self):
        if not self.z_threshold > 0:
            raise ValueError("z_threshold must be positive")
        if not all(s > 0 for s in self.norm.std):
            raise ValueError("every std entry must be positive")


def train_zscore(features, train_fraction: float = 0.20, z_threshold: float = 3.0) -> ZScoreModel:
    table = as_table(features)
    subset = select_training_subset(table, train_fraction)
    if len(subset) == 0:
        raise TrainingError("empty training subset")
    _check_finite(subset)
    return ZScoreModel(compute_norm_stats(subset), float(z_threshold))


def infer_zscore(features, model: ZScoreModel) -> Verdicts:
    table = as_table(features)
    _check_finite(table)
    z = normalize(table.values, model.norm)
    score = np.abs(z).max(axis=1) if len(table) else np.zeros(0)
    return Verdicts(table.timestamp_ms, np.zeros(len(table), dtype=np.int64), score, score > model.z_threshold)
