"""Plain ``key = value`` configuration files.

One setting per line, ``#`` starts a comment, unknown keys are errors.
Keys mirror the fields of the pipeline dataclasses::

    # signal
    window_len = 100
    stride = 100
    spike_clamp_a = 30.0
    sample_rate_hz = 1000        # also sets record_interval_s = stride / rate
    # features
    roll_window = 10
    on_threshold_a = 0.3
    record_interval_s = 0.1      # optional explicit override
    # training / detection
    k = 3
    iterations = 3
    train_fraction = 0.2
    percentile = 95
    scale = 1.0
    z_threshold = 3.0
    # synthetic trace
    seed = 0
    duration_s = 120
    mains_hz = 60
    on_amp_a = 1.2
    off_noise_a = 0.05
    on_mean_s = 0.5
    on_sd_s = 0.1
    off_mean_s = 0.6
    off_sd_s = 0.1
    # anomaly injection: "planned" (default), "none", or explicit lines
    anomalies = planned
    anomalies_per_kind = 2
    anomaly_multiplier = 3.0
    short_cycle_period_s = 0.05
    anomaly = ProlongedOff 70.0 2.5 0
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from .datagen import AnomalyKind, AnomalySpec, TraceConfig, plan_anomalies
from .features import FeatureConfig
from .kmeans import TrainConfig
from .pipeline import PipelineConfig
from .signal import SignalConfig


class ConfigError(ValueError):
    pass


_INT_KEYS = {"window_len", "stride", "roll_window", "k", "iterations", "seed", "anomalies_per_kind"}
_FLOAT_KEYS = {
    "spike_clamp_a", "sample_rate_hz", "on_threshold_a", "record_interval_s", "train_fraction",
    "percentile", "scale", "z_threshold", "duration_s", "mains_hz", "on_amp_a", "off_noise_a",
    "on_mean_s", "on_sd_s", "off_mean_s", "off_sd_s", "anomaly_multiplier", "short_cycle_period_s",
}
_STR_KEYS = {"anomalies"}


@dataclass(frozen=True)
class Settings:
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    trace: TraceConfig = field(default_factory=TraceConfig)
    anomaly_mode: str = "planned"
    anomalies_per_kind: int = 2
    anomaly_multiplier: float = 3.0
    short_cycle_period_s: float = 0.05
    explicit_anomalies: tuple[AnomalySpec, ...] = ()

    def anomalies(self) -> list[AnomalySpec]:
        if self.explicit_anomalies:
            return list(self.explicit_anomalies)
        if self.anomaly_mode == "none":
            return []
        return plan_anomalies(
            self.trace,
            per_kind=self.anomalies_per_kind,
            train_fraction=self.pipeline.train.train_fraction,
            multiplier=self.anomaly_multiplier,
            short_cycle_period_s=self.short_cycle_period_s,
        )

    def with_seed(self, seed: int) -> "Settings":
        return replace(self, trace=replace(self.trace, seed=seed))


def _anomaly(value: str, lineno: int) -> AnomalySpec:
    parts = value.split()
    if len(parts) not in (3, 4):
        raise ConfigError(f"line {lineno}: anomaly needs 'Kind start_s duration_s [magnitude]'")
    try:
        kind = AnomalyKind(parts[0])
        nums = [float(p) for p in parts[1:]]
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: bad anomaly {value!r}") from exc
    return AnomalySpec(kind, nums[0], nums[1], nums[2] if len(nums) == 3 else 0.0)


def parse_config(text: str) -> Settings:
    values: dict[str, object] = {}
    anomalies = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if key == "anomaly":
                anomalies.append(_anomaly(value, lineno))
                continue
            if key in _INT_KEYS:
                values[key] = int(value)
            elif key in _FLOAT_KEYS:
                values[key] = float(value)
            elif key in _STR_KEYS:
                values[key] = value
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from None
    return build_settings(values, anomalies)


def _pick(cls, values):
    names = {f.name for f in fields(cls)}
    return {k: v for k, v in values.items() if k in names}


def build_settings(values: dict, anomalies=()) -> Settings:
    values = dict(values)
    mode = values.pop("anomalies", "planned")
    if mode not in ("planned", "none"):
        raise ConfigError(f"anomalies must be 'planned' or 'none', got {mode!r}")
    try:
        sig = SignalConfig(**_pick(SignalConfig, values))
        trace = TraceConfig(**_pick(TraceConfig, values))
        if "record_interval_s" not in values:
            values["record_interval_s"] = sig.stride / trace.sample_rate_hz
        feat = FeatureConfig(**_pick(FeatureConfig, values))
        train = TrainConfig(**_pick(TrainConfig, values))
        pipeline = PipelineConfig(sig, feat, train, float(values.get("z_threshold", 3.0)))
        if not pipeline.z_threshold > 0:
            raise ValueError("z_threshold must be positive")
        per_kind = int(values.get("anomalies_per_kind", 2))
        if per_kind < 0:
            raise ValueError("anomalies_per_kind must be >= 0")
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return Settings(
        pipeline=pipeline,
        trace=trace,
        anomaly_mode=mode,
        anomalies_per_kind=per_kind,
        anomaly_multiplier=float(values.get("anomaly_multiplier", 3.0)),
        short_cycle_period_s=float(values.get("short_cycle_period_s", 0.05)),
        explicit_anomalies=tuple(anomalies),
    )


def load_config(path: Optional[str]) -> Settings:
    if path is None:
        return build_settings({})
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    return parse_config(text)
