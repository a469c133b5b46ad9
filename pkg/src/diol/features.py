"""Compressor state labeling and five-feature extraction from the RMS stream."""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .signal import FormatError, as_rms, parse_float_field, parse_int_field

FEATURE_NAMES = ("rms", "rolling_mean", "rolling_std", "rms_slope", "on_duration_s")
FEATURE_HEADER = "timestamp_ms," + ",".join(FEATURE_NAMES)


class State(enum.IntEnum):
    OFF = 0
    ON = 1


class StateLabel(NamedTuple):
    timestamp_ms: int
    state: State


class FeatureVector(NamedTuple):
    timestamp_ms: int
    rms: float
    rolling_mean: float
    rolling_std: float
    rms_slope: float
    on_duration_s: float

    def values(self):
        return self[1:]


@dataclass(frozen=True)
class FeatureConfig:
    roll_window: int = 10
    on_threshold_a: float = 0.3
    record_interval_s: float = 0.1

    def __post_init__(self):
        if self.roll_window < 2:
            raise ValueError("roll_window must be at least 2")
        if not self.on_threshold_a > 0:
            raise ValueError("on_threshold_a must be positive")
        if not self.record_interval_s > 0:
            raise ValueError("record_interval_s must be positive")


class FeatureTable:
    """Feature vectors as an ``(n, 5)`` array plus an ``int64`` timestamp column.

    Indexing with an integer yields a :class:`FeatureVector`; slicing yields
    another table.
    """

    def __init__(self, timestamp_ms, values):
        self.timestamp_ms = np.asarray(timestamp_ms, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if values.size == 0:
            values = values.reshape(0, len(FEATURE_NAMES))
        self.values = values
        if values.ndim != 2 or values.shape != (len(self.timestamp_ms), len(FEATURE_NAMES)):
            raise ValueError(f"expected ({len(self.timestamp_ms)}, 5) feature array, got {values.shape}")

    @classmethod
    def from_vectors(cls, vectors):
        vectors = list(vectors)
        ts = [int(v[0]) for v in vectors]
        vals = [[float(x) for x in v[1:]] for v in vectors]
        return cls(ts, np.array(vals, dtype=np.float64).reshape(len(vectors), len(FEATURE_NAMES)))

    def __len__(self):
        return len(self.timestamp_ms)

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return FeatureTable(self.timestamp_ms[idx], self.values[idx])
        return FeatureVector(int(self.timestamp_ms[idx]), *map(float, self.values[idx]))

    def __iter__(self):
        for t, row in zip(self.timestamp_ms.tolist(), self.values.tolist()):
            yield FeatureVector(t, *row)

    def __eq__(self, other):
        if not isinstance(other, FeatureTable):
            return NotImplemented
        return np.array_equal(self.timestamp_ms, other.timestamp_ms) and np.array_equal(
            self.values, other.values
        )

    def column(self, name: str) -> np.ndarray:
        return self.values[:, FEATURE_NAMES.index(name)]

    def __repr__(self):
        return f"FeatureTable(n={len(self)})"


def as_table(features) -> FeatureTable:
    if isinstance(features, FeatureTable):
        return features
    return FeatureTable.from_vectors(features)


def label_states(records, cfg: FeatureConfig = FeatureConfig()) -> list[StateLabel]:
    r = as_rms(records)
    on = r.rms_a > cfg.on_threshold_a
    return [StateLabel(t, State.ON if s else State.OFF) for t, s in zip(r.timestamp_ms.tolist(), on.tolist())]


def rolling_mean(values, w: int) -> np.ndarray:
    if w < 1:
        raise ValueError("window must be >= 1")
    return kernels.rolling_mean_std(np.asarray(values, dtype=np.float64), w)[0]


def rolling_std(values, w: int) -> np.ndarray:
    """Trailing-window population standard deviation; warm-up uses the prefix."""
    if w < 1:
        raise ValueError("window must be >= 1")
    return kernels.rolling_mean_std(np.asarray(values, dtype=np.float64), w)[1]


def rms_slope(values, w: int) -> np.ndarray:
    """Endpoint difference quotient across the trailing window (0 at index 0)."""
    if w < 2:
        raise ValueError("slope window must be >= 2")
    v = np.asarray(values, dtype=np.float64)
    n = len(v)
    idx = np.arange(n)
    j = np.maximum(idx - w + 1, 0)
    out = np.zeros(n, dtype=np.float64)
    if n > 1:
        out[1:] = (v[1:] - v[j[1:]]) / (idx[1:] - j[1:])
    return out


def _run_lengths(on: np.ndarray) -> np.ndarray:
    # consecutive-True count ending at each index, reset at every False
    n = len(on)
    idx = np.arange(1, n + 1)
    last_off = np.maximum.accumulate(np.where(on, 0, idx))
    return np.where(on, idx - last_off, 0)


def on_duration(labels, cfg: FeatureConfig = FeatureConfig()) -> np.ndarray:
    on = np.array([lab.state == State.ON for lab in labels], dtype=bool)
    return _run_lengths(on) * cfg.record_interval_s


def extract_features(records, cfg: FeatureConfig = FeatureConfig()) -> FeatureTable:
    r = as_rms(records)
    rms = r.rms_a
    mean, std = kernels.rolling_mean_std(rms, cfg.roll_window)
    slope = rms_slope(rms, cfg.roll_window)
    dur = _run_lengths(rms > cfg.on_threshold_a) * cfg.record_interval_s
    return FeatureTable(r.timestamp_ms, np.column_stack([rms, mean, std, slope, dur]))


def format_feature_csv(features) -> str:
    table = as_table(features)
    buf = io.StringIO()
    buf.write(FEATURE_HEADER + "\n")
    for t, row in zip(table.timestamp_ms.tolist(), table.values.tolist()):
        buf.write(f"{t}," + ",".join(repr(x) for x in row) + "\n")
    return buf.getvalue()


def parse_feature_csv(text) -> FeatureTable:
    if not isinstance(text, str):
        text = text.read()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != FEATURE_HEADER:
        raise FormatError(f"expected header {FEATURE_HEADER!r}", line=1)
    ts = []
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 6:
            raise FormatError(f"expected 6 fields, got {len(parts)}", line=lineno)
        try:
            ts.append(parse_int_field(parts[0]))
            rows.append([parse_float_field(p) for p in parts[1:]])
        except ValueError:
            raise FormatError(f"unparsable row {line!r}", line=lineno) from None
    return FeatureTable(ts, np.array(rows, dtype=np.float64).reshape(len(rows), 5))
