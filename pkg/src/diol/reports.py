"""Verdict and timeline report files."""

from __future__ import annotations

import io
import json

import numpy as np

from .features import FeatureTable
from .kmeans import Verdicts
from .signal import FormatError, parse_float_field, parse_int_field

VERDICT_HEADER = "timestamp_ms,cluster,distance,is_anomaly"
TIMELINE_HEADER = "timestamp_ms,rms,state,is_anomaly"


def format_verdict_csv(verdicts: Verdicts) -> str:
    buf = io.StringIO()
    buf.write(VERDICT_HEADER + "\n")
    for t, c, d, a in zip(
        verdicts.timestamp_ms.tolist(), verdicts.cluster.tolist(), verdicts.distance.tolist(), verdicts.is_anomaly.tolist()
    ):
        buf.write(f"{t},{c},{d!r},{int(a)}\n")
    return buf.getvalue()


def format_verdict_jsonl(verdicts: Verdicts) -> str:
    return "".join(json.dumps(v._asdict()) + "\n" for v in verdicts)


def parse_verdict_csv(text: str) -> Verdicts:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != VERDICT_HEADER:
        raise FormatError(f"expected header {VERDICT_HEADER!r}", line=1)
    ts, cl, dist, flag = [], [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 4 or parts[3] not in ("0", "1"):
            raise FormatError(f"malformed verdict row {line!r}", line=lineno)
        try:
            ts.append(parse_int_field(parts[0]))
            cl.append(parse_int_field(parts[1]))
            dist.append(parse_float_field(parts[2]))
        except ValueError:
            raise FormatError(f"malformed verdict row {line!r}", line=lineno) from None
        flag.append(parts[3] == "1")
    return Verdicts(ts, cl, dist, flag)


def build_timeline(verdicts: Verdicts, features: FeatureTable) -> str:
    """Join verdicts and features on timestamp into plot-ready rows.

    ``state`` is ON wherever the ON-duration feature is positive.

    Raises:
        ValueError: the two inputs do not cover the same timestamps.
    """
    if not np.array_equal(verdicts.timestamp_ms, features.timestamp_ms):
        raise ValueError("verdict and feature timestamps do not match")
    rms = features.column("rms").tolist()
    on = (features.column("on_duration_s") > 0).tolist()
    buf = io.StringIO()
    buf.write(TIMELINE_HEADER + "\n")
    for t, r, s, a in zip(verdicts.timestamp_ms.tolist(), rms, on, verdicts.is_anomaly.tolist()):
        buf.write(f"{t},{r!r},{'ON' if s else 'OFF'},{int(a)}\n")
    return buf.getvalue()
