"""Command-line front end.

Exit status: 0 success, 1 pipeline or domain error, 2 usage error.
Summaries go to stdout as one JSON line; logs go to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from contextlib import contextmanager
from pathlib import Path

from . import datagen, kmeans, model_format, zscore
from .config import ConfigError, Settings, load_config
from .devices import run_device_a, run_device_b, verify_equivalence
from .features import FeatureTable, extract_features, format_feature_csv, parse_feature_csv
from .kernels import BACKEND
from .pipeline import detection_summary, interval_agreement
from .reports import build_timeline, format_verdict_csv, format_verdict_jsonl, parse_verdict_csv
from .signal import cleanse, compute_rms_windows, format_sample_csv, parse_sample_csv

log = logging.getLogger("diol")

EXIT_OK, EXIT_ERROR, EXIT_USAGE = 0, 1, 2


class StageError(RuntimeError):
    def __init__(self, stage: str, exc: BaseException):
        detail = str(exc)
        if isinstance(exc, model_format.ParseError):
            detail = f"{exc.kind.value}: line {exc.line}: {exc.detail}"
        super().__init__(f"{stage}: {detail}")
        self.stage = stage
        self.cause = exc


class Stages:
    """Times named pipeline stages and tags failures with the stage name."""

    def __init__(self):
        self.timings_ms: dict[str, float] = {}

    @contextmanager
    def __call__(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        except StageError:
            raise
        except (ValueError, OSError, RuntimeError) as exc:
            raise StageError(name, exc) from exc
        finally:
            self.timings_ms[name] = (time.perf_counter() - t0) * 1000.0


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=False) + "\n")
    sys.stdout.flush()


def _summary(records: int, flagged: int, stages: Stages, infer_stage: str = "infer") -> dict:
    infer_s = stages.timings_ms.get(infer_stage, 0.0) / 1000.0
    return {
        "records_processed": records,
        "anomalies_flagged": flagged,
        "throughput_records_per_s": records / infer_s if infer_s > 0 else None,
        "stage_timings_ms": {k: round(v, 3) for k, v in stages.timings_ms.items()},
        "kernel_backend": BACKEND,
    }


def _load_features(path: str, settings: Settings, stages: Stages) -> FeatureTable:
    pipe = settings.pipeline
    with stages("ingest"):
        samples = parse_sample_csv(Path(path).read_text(encoding="utf-8"))
    with stages("cleanse"):
        clean = cleanse(samples, pipe.signal)
    with stages("rms"):
        rms = compute_rms_windows(clean, pipe.signal)
    with stages("features"):
        table = extract_features(rms, pipe.features)
        if len(table) == 0:
            raise ValueError("no feature records (trace shorter than one RMS window)")
    log.info("%d samples -> %d feature records", len(samples), len(table))
    return table


def _write(path, text: str) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text, encoding="utf-8")


def _settings(args) -> Settings:
    settings = load_config(args.config)
    if getattr(args, "seed_override", None) is not None:
        settings = settings.with_seed(args.seed_override)
    return settings


def _truth(path):
    if path is None:
        return None
    return datagen.truth_from_json(Path(path).read_text(encoding="utf-8"))


def cmd_gen_data(args) -> int:
    settings = _settings(args)
    stages = Stages()
    with stages("generate"):
        trace = datagen.generate_trace(settings.trace)
        trace = datagen.inject_anomalies(trace, settings.anomalies())
    with stages("write"):
        _write(args.out, format_sample_csv(trace.samples))
        if args.truth:
            _write(args.truth, datagen.truth_to_json(trace.truth))
    _emit(
        {
            "samples": len(trace.samples),
            "anomalies": len(trace.truth),
            "seed": settings.trace.seed,
            "stage_timings_ms": {k: round(v, 3) for k, v in stages.timings_ms.items()},
        }
    )
    return EXIT_OK


def cmd_features(args) -> int:
    settings = _settings(args)
    stages = Stages()
    table = _load_features(args.samples, settings, stages)
    with stages("write"):
        _write(args.out, format_feature_csv(table))
    _emit({"records_processed": len(table), "stage_timings_ms": stages.timings_ms})
    return EXIT_OK


def cmd_train(args) -> int:
    settings = _settings(args)
    stages = Stages()
    table = _load_features(args.samples, settings, stages)
    with stages("train"):
        model = kmeans.train(table, settings.pipeline.train)
    with stages("serialize"):
        _write(args.out, model_format.serialize(model))
    with stages("infer"):
        verdicts = kmeans.infer(table, model)
    summary = _summary(len(table), verdicts.flagged, stages)
    summary["threshold"] = model.threshold
    summary["model"] = str(args.out)
    _emit(summary)
    return EXIT_OK


def _run_detector(args, settings: Settings, table: FeatureTable, stages: Stages):
    if args.detector == "zscore":
        with stages("train"):
            model = zscore.train_zscore(table, settings.pipeline.train.train_fraction, settings.pipeline.z_threshold)
        with stages("infer"):
            return zscore.infer_zscore(table, model)
    with stages("load"):
        text = Path(args.model).read_text(encoding="utf-8")
    with stages("parse"):
        model = model_format.parse(text).model
    with stages("infer"):
        return kmeans.infer(table, model)


def cmd_infer(args) -> int:
    if args.detector == "kmeans" and args.model is None:
        print("diol infer: error: --model is required for the kmeans detector", file=sys.stderr)
        return EXIT_USAGE
    settings = _settings(args)
    stages = Stages()
    # reject a bad model before spending time on the trace
    if args.detector == "kmeans" and args.model is not None:
        with stages("parse"):
            model_format.parse(Path(args.model).read_text(encoding="utf-8"))
    table = _load_features(args.samples, settings, stages)
    verdicts = _run_detector(args, settings, table, stages)
    if args.out:
        with stages("write"):
            text = format_verdict_jsonl(verdicts) if args.format == "jsonl" else format_verdict_csv(verdicts)
            _write(args.out, text)
    summary = _summary(len(table), verdicts.flagged, stages)
    summary["detector"] = args.detector
    truth = _truth(args.truth)
    if truth is not None:
        summary["detection"] = detection_summary(verdicts, truth)
    _emit(summary)
    return EXIT_OK


def cmd_diol_demo(args) -> int:
    settings = _settings(args)
    stages = Stages()
    table = _load_features(args.samples, settings, stages)
    workdir = Path(args.out)
    model_path = workdir / "MODEL.TXT"
    with stages("workdir"):
        workdir.mkdir(parents=True, exist_ok=True)
    with stages("device_a"):
        rep_a = run_device_a(table, settings.pipeline.train, model_path)
    with stages("device_b"):
        rep_b = run_device_b(model_path, table)
    with stages("write"):
        _write(workdir / "verdicts_device_a.csv", format_verdict_csv(rep_a.verdicts))
        _write(workdir / "verdicts_device_b.csv", format_verdict_csv(rep_b.verdicts))
    result = verify_equivalence(rep_a, rep_b)
    out = result.to_dict()
    out["records"] = len(table)
    out["anomalies_flagged"] = rep_a.verdicts.flagged
    out["device_timings_ms"] = {"A": rep_a.timing, "B": rep_b.timing}
    out["model"] = str(model_path)
    truth = _truth(args.truth)
    if truth is not None:
        out["detection"] = detection_summary(rep_b.verdicts, truth)
    _emit(out)
    return EXIT_OK if result.identical else EXIT_ERROR


def cmd_timeline(args) -> int:
    stages = Stages()
    with stages("read"):
        verdicts = parse_verdict_csv(Path(args.verdicts).read_text(encoding="utf-8"))
        features = parse_feature_csv(Path(args.features).read_text(encoding="utf-8"))
    with stages("join"):
        text = build_timeline(verdicts, features)
    with stages("write"):
        _write(args.out, text)
    _emit({"rows": len(verdicts), "anomalies_flagged": verdicts.flagged})
    return EXIT_OK


def cmd_compare(args) -> int:
    settings = _settings(args)
    stages = Stages()
    table = _load_features(args.samples, settings, stages)
    pipe = settings.pipeline
    with stages("kmeans_train"):
        km_model = kmeans.train(table, pipe.train)
    with stages("kmeans_infer"):
        km = kmeans.infer(table, km_model)
    with stages("zscore_train"):
        z_model = zscore.train_zscore(table, pipe.train.train_fraction, pipe.z_threshold)
    with stages("zscore_infer"):
        zs = zscore.infer_zscore(table, z_model)
    out = {
        "kmeans": _summary(len(table), km.flagged, stages, "kmeans_infer"),
        "zscore": _summary(len(table), zs.flagged, stages, "zscore_infer"),
        "record_agreement": float((km.is_anomaly == zs.is_anomaly).mean()),
    }
    truth = _truth(args.truth)
    if truth is not None:
        out["kmeans"]["detection"] = detection_summary(km, truth)
        out["zscore"]["detection"] = detection_summary(zs, truth)
        out["interval_agreement"] = interval_agreement(km, zs, truth)
    _emit(out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="diol", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, samples=True, config=True):
        if samples:
            sp.add_argument("samples", help="sample CSV (timestamp_ms,current_a)")
        if config:
            sp.add_argument("--config", help="key=value configuration file")
            sp.add_argument("--seed-override", type=int, help="replace the trace seed from the config")

    sp = sub.add_parser("gen-data", help="write a synthetic sample CSV and ground-truth JSON")
    common(sp, samples=False)
    sp.add_argument("--out", required=True, help="sample CSV to write")
    sp.add_argument("--truth", help="ground-truth JSON to write")
    sp.set_defaults(func=cmd_gen_data)

    sp = sub.add_parser("features", help="export the feature CSV of a trace")
    common(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_features)

    sp = sub.add_parser("train", help="train K-Means and write MODEL.TXT (device A)")
    common(sp)
    sp.add_argument("--out", "--model", dest="out", required=True, help="MODEL.TXT to write")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("infer", help="score a trace with a stored model or the Z-Score baseline")
    common(sp)
    sp.add_argument("--model", help="MODEL.TXT to load (kmeans detector)")
    sp.add_argument("--detector", choices=("kmeans", "zscore"), default="kmeans")
    sp.add_argument("--out", help="verdict report to write")
    sp.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    sp.add_argument("--truth", help="ground-truth JSON for recall/false-positive metrics")
    sp.set_defaults(func=cmd_infer)

    sp = sub.add_parser("diol-demo", help="device A trains and exports, device B loads and infers")
    common(sp)
    sp.add_argument("--out", required=True, help="working directory shared by both devices")
    sp.add_argument("--truth", help="ground-truth JSON for recall/false-positive metrics")
    sp.set_defaults(func=cmd_diol_demo)

    sp = sub.add_parser("timeline", help="join verdicts and features into a plot-ready timeline CSV")
    sp.add_argument("verdicts")
    sp.add_argument("features")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_timeline)

    sp = sub.add_parser("compare", help="run K-Means and Z-Score on the same trace")
    common(sp)
    sp.add_argument("--truth", help="ground-truth JSON for interval agreement")
    sp.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
