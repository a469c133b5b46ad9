import dataclasses

import numpy as np
import pytest

from diol import kmeans, model_format
from diol.datagen import AnomalyKind, AnomalySpec, TraceConfig, generate_trace, inject_anomalies
from diol.devices import InferenceDevice, ModelSource, run_device_a, run_device_b, verify_equivalence
from diol.kmeans import TrainConfig
from diol.pipeline import detected_intervals, features_from_samples


@pytest.fixture(scope="module")
def trace_features():
    trace = generate_trace(TraceConfig(seed=11, duration_s=60))
    specs = [
        AnomalySpec(AnomalyKind.ExtendedRuntime, 20.0, 1.5, 3.0),
        AnomalySpec(AnomalyKind.ShortCycle, 35.0, 3.3, 0.05),
        AnomalySpec(AnomalyKind.ProlongedOff, 50.0, 1.8),
    ]
    trace = inject_anomalies(trace, specs)
    return trace, features_from_samples(trace.samples)


def test_device_a_flags_truth(trace_features, tmp_path):
    trace, feats = trace_features
    rep = run_device_a(feats, TrainConfig(), tmp_path / "MODEL.TXT")
    assert all(detected_intervals(rep.verdicts, trace.truth))
    assert set(rep.timing) == {"train", "infer"}
    assert rep.model_source is ModelSource.TrainedLocally
    model_format.load(tmp_path / "MODEL.TXT")


def test_device_b_matches_a(trace_features, tmp_path):
    _, feats = trace_features
    a = run_device_a(feats, TrainConfig(), tmp_path / "MODEL.TXT")
    b = run_device_b(tmp_path / "MODEL.TXT", feats)
    assert set(b.timing) == {"parse", "infer"}
    assert b.model_source is ModelSource.LoadedFromFile
    res = verify_equivalence(a, b)
    assert res.identical and res.flag_mismatches == 0 and res.max_distance_delta == 0.0
    assert verify_equivalence(a, a).identical


def test_device_b_never_trains(trace_features, tmp_path, monkeypatch):
    _, feats = trace_features
    run_device_a(feats, TrainConfig(), tmp_path / "MODEL.TXT")
    calls = []
    for name in ("train", "lloyd_iterate", "compute_threshold", "compute_norm_stats", "init_centroids"):
        orig = getattr(kmeans, name)
        monkeypatch.setattr(kmeans, name, lambda *a, _n=name, _o=orig, **k: calls.append(_n) or _o(*a, **k))
    run_device_b(tmp_path / "MODEL.TXT", feats)
    assert calls == []


def test_truncated_file_rejected(trace_features, tmp_path):
    _, feats = trace_features
    path = tmp_path / "MODEL.TXT"
    run_device_a(feats, TrainConfig(), path)
    text = path.read_text()
    path.write_text(text[: text.index("MEAN:")])
    with pytest.raises(model_format.ParseError) as err:
        run_device_b(path, feats)
    assert err.value.kind is model_format.ErrorKind.MissingSection


def test_perturbed_threshold_detected(trace_features, tmp_path):
    _, feats = trace_features
    a = run_device_a(feats, TrainConfig(), tmp_path / "a.txt")
    bumped = dataclasses.replace(a.model, threshold=a.model.threshold + 1.0)
    model_format.dump(bumped, tmp_path / "b.txt")
    b = run_device_b(tmp_path / "b.txt", feats)
    in_band = int(((a.verdicts.distance > a.model.threshold) & (a.verdicts.distance <= bumped.threshold)).sum())
    assert in_band > 0
    res = verify_equivalence(a, b)
    assert not res.identical and res.flag_mismatches == in_band
    assert res.first_divergence is not None


def test_portability_across_configs(tmp_path):
    for seed in range(5):
        trace = generate_trace(TraceConfig(seed=seed, duration_s=20))
        feats = features_from_samples(trace.samples)
        a = run_device_a(feats, TrainConfig(k=seed % 3 + 1, percentile=90 + seed), tmp_path / f"{seed}.txt")
        b = run_device_b(tmp_path / f"{seed}.txt", feats)
        assert np.array_equal(a.verdicts.distance, b.verdicts.distance)
        assert verify_equivalence(a, b).identical


def test_inference_device_keeps_last_good_model(trace_features, tmp_path):
    _, feats = trace_features
    good = tmp_path / "good.txt"
    run_device_a(feats, TrainConfig(), good)
    dev = InferenceDevice()
    with pytest.raises(RuntimeError):
        dev.infer(feats)
    model = dev.load(good)
    bad = tmp_path / "bad.txt"
    bad.write_text("DIOL_MODEL v9\n")
    with pytest.raises(model_format.ParseError):
        dev.load(bad)
    assert dev.model is model
    assert len(dev.infer(feats)) == len(feats)


def test_equivalence_requires_same_timestamps(trace_features, tmp_path):
    _, feats = trace_features
    a = run_device_a(feats, TrainConfig(), tmp_path / "m.txt")
    b = run_device_b(tmp_path / "m.txt", feats[1:])
    with pytest.raises(ValueError):
        verify_equivalence(a, b)
