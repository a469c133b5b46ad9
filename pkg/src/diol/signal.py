"""Current-sample ingestion, cleansing and fixed-window RMS reduction."""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from . import kernels

log = logging.getLogger(__name__)

SAMPLE_HEADER = "timestamp_ms,current_a"


class FormatError(ValueError):
    """Malformed input file; ``line`` is 1-based (0 when not line-specific)."""

    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


class CurrentSample(NamedTuple):
    timestamp_ms: int
    current_a: float


class RmsRecord(NamedTuple):
    timestamp_ms: int
    rms_a: float


@dataclass(frozen=True)
class SignalConfig:
    window_len: int = 100
    stride: int = 100
    spike_clamp_a: float = 30.0

    def __post_init__(self):
        if self.window_len < 1 or self.stride < 1:
            raise ValueError("window_len and stride must be positive")
        if self.stride > self.window_len:
            raise ValueError("stride must not exceed window_len")
        if not self.spike_clamp_a > 0:
            raise ValueError("spike_clamp_a must be positive")


class _Series:
    """Column-backed sequence of named tuples."""

    _row: type

    def __len__(self):
        return len(self.timestamp_ms)

    def __iter__(self):
        row = self._row
        for t, v in zip(self.timestamp_ms.tolist(), self._values().tolist()):
            yield row(t, v)

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return type(self)(self.timestamp_ms[idx], self._values()[idx])
        return self._row(int(self.timestamp_ms[idx]), float(self._values()[idx]))

    def __eq__(self, other):
        if not isinstance(other, type(self)):
            return NotImplemented
        return np.array_equal(self.timestamp_ms, other.timestamp_ms) and np.array_equal(
            self._values(), other._values()
        )

    def _values(self) -> np.ndarray:
        raise NotImplementedError

    @classmethod
    def from_rows(cls, rows: Iterable[tuple]):
        rows = list(rows)
        ts = np.array([int(r[0]) for r in rows], dtype=np.int64)
        vals = np.array([float(r[1]) for r in rows], dtype=np.float64)
        return cls(ts, vals)


class Samples(_Series):
    """Timestamped current readings stored as two aligned arrays."""

    _row = CurrentSample

    def __init__(self, timestamp_ms, current_a):
        self.timestamp_ms = np.asarray(timestamp_ms, dtype=np.int64)
        self.current_a = np.asarray(current_a, dtype=np.float64)
        if self.timestamp_ms.shape != self.current_a.shape or self.current_a.ndim != 1:
            raise ValueError("timestamp and current arrays must be 1-D and aligned")

    def _values(self):
        return self.current_a

    def __repr__(self):
        return f"Samples(n={len(self)})"


class RmsSeries(_Series):
    """Windowed RMS values; timestamps mark the last sample of each window."""

    _row = RmsRecord

    def __init__(self, timestamp_ms, rms_a):
        self.timestamp_ms = np.asarray(timestamp_ms, dtype=np.int64)
        self.rms_a = np.asarray(rms_a, dtype=np.float64)
        if self.timestamp_ms.shape != self.rms_a.shape or self.rms_a.ndim != 1:
            raise ValueError("timestamp and rms arrays must be 1-D and aligned")

    def _values(self):
        return self.rms_a

    def __repr__(self):
        return f"RmsSeries(n={len(self)})"


def as_samples(samples) -> Samples:
    if isinstance(samples, Samples):
        return samples
    return Samples.from_rows(samples)


def as_rms(records) -> RmsSeries:
    if isinstance(records, RmsSeries):
        return records
    return RmsSeries.from_rows(records)


def parse_int_field(tok: str) -> int:
    # int() tolerates whitespace and underscores; the grammar does not
    body = tok[1:] if tok[:1] == "-" else tok
    if not body.isdigit() or not body.isascii():
        raise ValueError(tok)
    return int(tok)


def parse_float_field(tok: str) -> float:
    if not tok or tok != tok.strip() or "_" in tok:
        raise ValueError(tok)
    return float(tok)


def parse_sample_csv(text) -> Samples:
    """Parse the sample CSV grammar (header ``timestamp_ms,current_a``).

    ``text`` may be a string or a text file object. Non-finite currents are
    syntactically valid here; ``cleanse`` removes them.

    Raises:
        FormatError: missing header, wrong field count or unparsable number.
    """
    if not isinstance(text, str):
        text = text.read()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != SAMPLE_HEADER:
        raise FormatError(f"expected header {SAMPLE_HEADER!r}", line=1)
    n = len(lines) - 1
    ts = np.empty(n, dtype=np.int64)
    cur = np.empty(n, dtype=np.float64)
    for i in range(n):
        line = lines[i + 1]
        parts = line.split(",")
        if len(parts) != 2:
            raise FormatError(f"expected 2 fields, got {len(parts)}", line=i + 2)
        try:
            ts[i] = parse_int_field(parts[0])
            cur[i] = parse_float_field(parts[1])
        except (ValueError, OverflowError):
            raise FormatError(f"unparsable row {line!r}", line=i + 2) from None
    log.debug("parsed %d samples", n)
    return Samples(ts, cur)


def format_sample_csv(samples) -> str:
    s = as_samples(samples)
    buf = io.StringIO()
    buf.write(SAMPLE_HEADER + "\n")
    buf.writelines(f"{t},{v!r}\n" for t, v in zip(s.timestamp_ms.tolist(), s.current_a.tolist()))
    return buf.getvalue()


@dataclass(frozen=True)
class CleanseStats:
    dropped_nonfinite: int
    dropped_timestamp: int
    clamped: int


def cleanse(samples, cfg: SignalConfig = SignalConfig(), *, report: bool = False):
    """Drop non-finite and out-of-order samples and clamp current spikes.

    A sample is kept iff its current is finite and its timestamp exceeds
    every earlier kept timestamp. Kept currents are clipped to
    ``[-spike_clamp_a, spike_clamp_a]``.

    Returns the cleansed :class:`Samples`, or ``(samples, CleanseStats)``
    when ``report`` is true.
    """
    s = as_samples(samples)
    finite = np.isfinite(s.current_a)
    # A finite sample that fails the ordering test never raises the running
    # maximum, so "greater than all earlier finite timestamps" is exactly
    # "greater than the last kept timestamp".
    ts_f = np.where(finite, s.timestamp_ms, np.iinfo(np.int64).min)
    prev_max = np.empty_like(ts_f)
    if len(ts_f):
        prev_max[0] = np.iinfo(np.int64).min
        np.maximum.accumulate(ts_f[:-1], out=prev_max[1:])
    ordered = s.timestamp_ms > prev_max
    if len(ts_f):
        ordered[0] = True
    keep = finite & ordered
    cur = s.current_a[keep]
    clamp = cfg.spike_clamp_a
    spikes = np.abs(cur) > clamp
    out = Samples(s.timestamp_ms[keep], np.clip(cur, -clamp, clamp))
    stats = CleanseStats(
        dropped_nonfinite=int((~finite).sum()),
        dropped_timestamp=int((finite & ~ordered).sum()),
        clamped=int(spikes.sum()),
    )
    if stats.dropped_nonfinite or stats.dropped_timestamp or stats.clamped:
        log.info("cleanse: %s", stats)
    return (out, stats) if report else out


def window_count(n: int, window_len: int, stride: int) -> int:
    if n < window_len:
        return 0
    return (n - window_len) // stride + 1


def compute_rms_windows(samples, cfg: SignalConfig = SignalConfig()) -> RmsSeries:
    """RMS over full windows of ``window_len`` samples advancing by ``stride``.

    The trailing partial window is discarded.
    """
    s = as_samples(samples)
    rms = kernels.rms_windows(s.current_a, cfg.window_len, cfg.stride)
    count = len(rms)
    ends = np.arange(count, dtype=np.int64) * cfg.stride + (cfg.window_len - 1)
    return RmsSeries(s.timestamp_ms[ends], rms)
