"""Glue: samples -> features, and interval-level scoring against ground truth."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .features import FeatureConfig, FeatureTable, extract_features
from .kmeans import TrainConfig, Verdicts
from .signal import SignalConfig, cleanse, compute_rms_windows


@dataclass(frozen=True)
class PipelineConfig:
    signal: SignalConfig = field(default_factory=SignalConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    z_threshold: float = 3.0


def features_from_samples(samples, cfg: PipelineConfig = PipelineConfig()) -> FeatureTable:
    clean = cleanse(samples, cfg.signal)
    return extract_features(compute_rms_windows(clean, cfg.signal), cfg.features)


def _truth_bounds(truth):
    for t in truth:
        if isinstance(t, dict):
            yield t["start_ms"], t["end_ms"]
        else:
            yield t.start_ms, t.end_ms


def detected_intervals(verdicts: Verdicts, truth) -> list[bool]:
    """Per truth interval: does any flagged verdict fall inside [start, end]?"""
    ts = verdicts.timestamp_ms[verdicts.is_anomaly]
    out = []
    for start, end in _truth_bounds(truth):
        lo = np.searchsorted(ts, start, side="left")
        out.append(bool(lo < len(ts) and ts[lo] <= end))
    return out


def interval_recall(verdicts: Verdicts, truth) -> float:
    hits = detected_intervals(verdicts, truth)
    return sum(hits) / len(hits) if hits else 1.0


def false_positive_rate(verdicts: Verdicts, truth=()) -> float:
    """Flagged fraction among records outside every truth interval."""
    inside = np.zeros(len(verdicts), dtype=bool)
    for start, end in _truth_bounds(truth):
        inside |= (verdicts.timestamp_ms >= start) & (verdicts.timestamp_ms <= end)
    outside = ~inside
    n = int(outside.sum())
    return float((verdicts.is_anomaly & outside).sum()) / n if n else 0.0


def interval_agreement(a: Verdicts, b: Verdicts, truth) -> float:
    """Fraction of truth intervals on which both detectors reach the same
    detected/missed outcome."""
    da, db = detected_intervals(a, truth), detected_intervals(b, truth)
    if not da:
        return 1.0
    return sum(x == y for x, y in zip(da, db)) / len(da)


def detection_summary(verdicts: Verdicts, truth) -> dict:
    return {
        "recall": interval_recall(verdicts, truth),
        "false_positive_rate": false_positive_rate(verdicts, truth),
        "intervals_detected": sum(detected_intervals(verdicts, truth)),
        "intervals_total": len(list(_truth_bounds(truth))),
    }
