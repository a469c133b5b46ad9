"""Synthetic compressor current traces with labelled injected anomalies.

Randomness comes from a xorshift64* generator (Vigna 2014; shifts 12/25/27,
output multiplier 0x2545F4914F6CDD1D) seeded through SplitMix64 (increment
0x9E3779B97F4A7C15, multipliers 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB).
Uniforms are the top 53 output bits scaled by 2**-53; normals use the
Box-Muller cosine branch, ``sqrt(-2 ln(1 - u1)) * cos(2 pi u2)``. The same
seed yields the same trace on every platform with an IEEE-754 libm.

Time is compressed: a normal compressor cycle lasts about a second, so a
few minutes of trace stand in for days of appliance operation.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .signal import Samples

MASK64 = 0xFFFFFFFFFFFFFFFF


def splitmix64(x: int) -> tuple[int, int]:
    """One SplitMix64 step; returns (new_state, output)."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return x, z ^ (z >> 31)


class Rng:
    """xorshift64* stream; ``stream`` selects an independent substream of ``seed``."""

    def __init__(self, seed: int, stream: int = 0):
        x = seed & MASK64
        for _ in range(stream + 1):
            x, out = splitmix64(x)
        self.state = out or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        self.state, out = kernels.xorshift_next(self.state)
        return out

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def normal(self) -> float:
        u1 = self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(6.283185307179586 * u2)

    def normals(self, n: int) -> np.ndarray:
        out, self.state = kernels.normal_fill(self.state, n)
        return out


@dataclass(frozen=True)
class TraceConfig:
    seed: int = 0
    duration_s: float = 120.0
    sample_rate_hz: float = 1000.0
    mains_hz: float = 60.0
    on_amp_a: float = 1.2
    off_noise_a: float = 0.05
    on_mean_s: float = 0.5
    on_sd_s: float = 0.1
    off_mean_s: float = 0.6
    off_sd_s: float = 0.1

    def __post_init__(self):
        for name in ("duration_s", "sample_rate_hz", "mains_hz", "on_amp_a", "on_mean_s", "on_sd_s", "off_mean_s", "off_sd_s"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be a positive number, got {val!r}")
        if not (math.isfinite(self.off_noise_a) and self.off_noise_a >= 0):
            raise ValueError(f"off_noise_a must be non-negative, got {self.off_noise_a!r}")
        if self.sample_rate_hz > 1000.0:
            raise ValueError("sample_rate_hz above 1000 cannot have strictly increasing millisecond timestamps")
        if not self.on_sd_s < self.on_mean_s:
            raise ValueError("on_sd_s must be smaller than on_mean_s")
        if not self.off_sd_s < self.off_mean_s:
            raise ValueError("off_sd_s must be smaller than off_mean_s")

    @property
    def n_samples(self) -> int:
        return int(math.floor(self.duration_s * self.sample_rate_hz))


class AnomalyKind(enum.Enum):
    ExtendedRuntime = "ExtendedRuntime"
    ShortCycle = "ShortCycle"
    ProlongedOff = "ProlongedOff"


@dataclass(frozen=True)
class AnomalySpec:
    """One injected interval. ``magnitude`` is the runtime multiplier for
    ExtendedRuntime, the ON/OFF period in seconds for ShortCycle, and unused
    for ProlongedOff."""

    kind: AnomalyKind
    start_s: float
    duration_s: float
    magnitude: float = 0.0

    @property
    def end_s(self) -> float:
        return self.start_s + self.duration_s

    @property
    def start_ms(self) -> int:
        return int(round(self.start_s * 1000.0))

    @property
    def end_ms(self) -> int:
        return int(round(self.end_s * 1000.0))


@dataclass(frozen=True)
class SyntheticTrace:
    samples: Samples
    truth: tuple[AnomalySpec, ...]
    config: TraceConfig
    on_mask: np.ndarray = field(repr=False, compare=False)
    noise: np.ndarray = field(repr=False, compare=False)


def _timestamps(cfg: TraceConfig, n: int) -> np.ndarray:
    return np.floor(np.arange(n, dtype=np.float64) * 1000.0 / cfg.sample_rate_hz).astype(np.int64)


def _clamped(rng: Rng, mean: float, sd: float) -> float:
    return min(max(mean + sd * rng.normal(), mean - 2.0 * sd), mean + 2.0 * sd)


def _schedule_mask(cfg: TraceConfig, rng: Rng) -> np.ndarray:
    n = cfg.n_samples
    mask = np.zeros(n, dtype=np.uint8)
    t = 0.0
    on = True
    while True:
        dur = _clamped(rng, cfg.on_mean_s, cfg.on_sd_s) if on else _clamped(rng, cfg.off_mean_s, cfg.off_sd_s)
        lo = int(round(t * cfg.sample_rate_hz))
        if lo >= n:
            break
        t += dur
        hi = min(int(round(t * cfg.sample_rate_hz)), n)
        if on:
            mask[lo:hi] = 1
        on = not on
    return mask


def _render(cfg: TraceConfig, mask: np.ndarray, noise: np.ndarray) -> Samples:
    current = kernels.render_current(
        mask, noise, cfg.on_amp_a, cfg.mains_hz, cfg.sample_rate_hz, cfg.off_noise_a
    )
    return Samples(_timestamps(cfg, len(mask)), current)


def generate_trace(cfg: TraceConfig = TraceConfig()) -> SyntheticTrace:
    """Alternating ON/OFF compressor cycles, starting ON at t=0.

    Durations are normal draws clamped to mean +/- 2 sd. ON current is a
    mains-frequency sine of amplitude ``on_amp_a``; Gaussian noise of
    standard deviation ``off_noise_a`` is added everywhere.
    """
    mask = _schedule_mask(cfg, Rng(cfg.seed, stream=0))
    noise = Rng(cfg.seed, stream=1).normals(cfg.n_samples)
    return SyntheticTrace(_render(cfg, mask, noise), (), cfg, mask, noise)


def inject_anomalies(trace: SyntheticTrace, specs) -> SyntheticTrace:
    """Overwrite the compressor schedule inside each spec's interval.

    Raises:
        ValueError: interval outside the trace or overlapping another one.
    """
    specs = sorted(specs, key=lambda s: s.start_s)
    if not specs:
        return trace
    cfg = trace.config
    fs = cfg.sample_rate_hz
    everything = sorted([*trace.truth, *specs], key=lambda s: s.start_s)
    for spec in specs:
        if not (spec.duration_s > 0 and spec.start_s >= 0 and spec.end_s <= cfg.duration_s):
            raise ValueError(f"anomaly {spec} lies outside the trace [0, {cfg.duration_s}] s")
        if spec.kind is AnomalyKind.ShortCycle and not spec.magnitude > 0:
            raise ValueError("ShortCycle needs a positive period (magnitude)")
    for a, b in zip(everything, everything[1:]):
        if b.start_s < a.end_s:
            raise ValueError(f"anomalies overlap: {a} and {b}")

    mask = trace.on_mask.copy()
    for spec in specs:
        lo = int(round(spec.start_s * fs))
        hi = min(int(round(spec.end_s * fs)), len(mask))
        if spec.kind is AnomalyKind.ExtendedRuntime:
            mask[lo:hi] = 1
        elif spec.kind is AnomalyKind.ProlongedOff:
            mask[lo:hi] = 0
        else:
            period = max(2, int(round(spec.magnitude * fs)))
            phase = np.arange(hi - lo) % period
            mask[lo:hi] = (phase < period // 2).astype(np.uint8)
    return SyntheticTrace(_render(cfg, mask, trace.noise), tuple(everything), cfg, mask, trace.noise)


def plan_anomalies(
    cfg: TraceConfig,
    per_kind: int = 2,
    train_fraction: float = 0.20,
    multiplier: float = 3.0,
    short_cycle_period_s: float = 0.05,
) -> list[AnomalySpec]:
    """Evenly spaced anomalies of every kind after the training prefix.

    ExtendedRuntime lasts ``multiplier * on_mean_s``, ProlongedOff
    ``multiplier * off_mean_s`` and ShortCycle ``multiplier`` normal cycles.
    """
    kinds = [AnomalyKind.ExtendedRuntime, AnomalyKind.ShortCycle, AnomalyKind.ProlongedOff] * per_kind
    cycle = cfg.on_mean_s + cfg.off_mean_s
    first = cfg.duration_s * train_fraction + 2.0 * cycle
    slot = (cfg.duration_s - first) / len(kinds)
    specs = []
    for i, kind in enumerate(kinds):
        if kind is AnomalyKind.ExtendedRuntime:
            dur, mag = multiplier * cfg.on_mean_s, multiplier
        elif kind is AnomalyKind.ProlongedOff:
            dur, mag = multiplier * cfg.off_mean_s, 0.0
        else:
            dur, mag = multiplier * cycle, short_cycle_period_s
        if dur + cycle > slot:
            raise ValueError("trace too short to place the requested anomalies")
        specs.append(AnomalySpec(kind, round(first + i * slot, 3), dur, mag))
    return specs


def truth_to_json(truth) -> str:
    rows = [{"kind": s.kind.value, "start_ms": s.start_ms, "end_ms": s.end_ms} for s in truth]
    return json.dumps(rows, indent=2) + "\n"


def truth_from_json(text: str) -> list[dict]:
    """Ground-truth intervals as ``{"kind", "start_ms", "end_ms"}`` dicts."""
    rows = json.loads(text)
    if not isinstance(rows, list):
        raise ValueError("truth file must hold a JSON list")
    out = []
    for row in rows:
        try:
            kind = AnomalyKind(row["kind"]).value
            start, end = int(row["start_ms"]), int(row["end_ms"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"bad truth entry {row!r}") from exc
        if end < start:
            raise ValueError(f"truth interval ends before it starts: {row!r}")
        out.append({"kind": kind, "start_ms": start, "end_ms": end})
    return out


def with_seed(cfg: TraceConfig, seed: int) -> TraceConfig:
    return replace(cfg, seed=seed)
