"""Two-device train-once/share-everywhere workflow.

Device A trains, exports MODEL.TXT and scores its features. Device B only
parses the file and scores; it never trains. The devices share nothing but
the file on disk.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import kmeans, model_format
from .features import as_table
from .kmeans import TrainConfig, Verdicts


class ModelSource(enum.Enum):
    TrainedLocally = "TrainedLocally"
    LoadedFromFile = "LoadedFromFile"


@dataclass
class DeviceReport:
    device_id: str
    verdicts: Verdicts
    model_source: ModelSource
    timing: dict[str, float] = field(default_factory=dict)
    model: Optional[kmeans.KMeansModel] = None


@dataclass(frozen=True)
class EquivalenceResult:
    identical: bool
    first_divergence: Optional[int]
    flag_mismatches: int
    max_distance_delta: float

    def to_dict(self) -> dict:
        return {
            "identical": self.identical,
            "first_divergence": self.first_divergence,
            "flag_mismatches": self.flag_mismatches,
            "max_distance_delta": self.max_distance_delta,
        }


def _ms_since(t0: float) -> float:
    return (time.perf_counter() - t0) * 1000.0


def run_device_a(features, cfg: TrainConfig, model_out, device_id: str = "A") -> DeviceReport:
    table = as_table(features)
    t0 = time.perf_counter()
    model = kmeans.train(table, cfg)
    train_ms = _ms_since(t0)
    model_format.dump(model, model_out)
    t0 = time.perf_counter()
    verdicts = kmeans.infer(table, model)
    infer_ms = _ms_since(t0)
    return DeviceReport(
        device_id, verdicts, ModelSource.TrainedLocally, {"train": train_ms, "infer": infer_ms}, model
    )


def run_device_b(model_in, features, device_id: str = "B") -> DeviceReport:
    """Load ``model_in`` and score ``features`` without any training.

    Raises:
        model_format.ParseError: the file was rejected; nothing was scored.
        OSError: the file could not be read.
    """
    table = as_table(features)
    text = Path(model_in).read_text(encoding="utf-8")
    t0 = time.perf_counter()
    doc = model_format.parse(text)
    parse_ms = _ms_since(t0)
    t0 = time.perf_counter()
    verdicts = kmeans.infer(table, doc.model)
    infer_ms = _ms_since(t0)
    return DeviceReport(
        device_id, verdicts, ModelSource.LoadedFromFile, {"parse": parse_ms, "infer": infer_ms}, doc.model
    )


class InferenceDevice:
    """Device-B style holder that keeps its last good model across reloads."""

    def __init__(self, device_id: str = "B"):
        self.device_id = device_id
        self.model: Optional[kmeans.KMeansModel] = None

    def load(self, path) -> kmeans.KMeansModel:
        """Replace the active model; on rejection the previous one stays."""
        doc = model_format.load(path)
        self.model = doc.model
        return self.model

    def infer(self, features) -> Verdicts:
        if self.model is None:
            raise RuntimeError("no model loaded")
        return kmeans.infer(features, self.model)


def verify_equivalence(a: DeviceReport, b: DeviceReport) -> EquivalenceResult:
    va, vb = a.verdicts, b.verdicts
    if not np.array_equal(va.timestamp_ms, vb.timestamp_ms):
        raise ValueError("reports cover different timestamp sequences")
    flag_diff = va.is_anomaly != vb.is_anomaly
    # distances are finite and never -0.0, so == is bitwise identity here
    dist_diff = va.distance != vb.distance
    diverge = flag_diff | dist_diff
    first = int(va.timestamp_ms[np.argmax(diverge)]) if diverge.any() else None
    delta = float(np.max(np.abs(va.distance - vb.distance))) if len(va) else 0.0
    mismatches = int(flag_diff.sum())
    return EquivalenceResult(
        identical=not diverge.any(), first_divergence=first, flag_mismatches=mismatches, max_distance_delta=delta
    )
