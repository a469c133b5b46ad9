import math
import random
import tracemalloc

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from diol import model_format
from diol.features import FEATURE_NAMES, FeatureTable
from diol.kmeans import (
    KMeansModel,
    NonFiniteFeature,
    NormStats,
    TrainConfig,
    TrainingError,
    assign,
    compute_norm_stats,
    compute_threshold,
    denormalize,
    infer,
    init_centroids,
    lloyd_iterate,
    normalize,
    objective,
    select_training_subset,
    train,
)
from oracles import lloyd_reference, nearest_rank_reference, wcss_reference


def _table(rows):
    rows = np.asarray(rows, dtype=np.float64)
    return FeatureTable(np.arange(len(rows)) * 100, rows)


def test_subset_sizes():
    assert len(select_training_subset(list(range(10)), 0.2)) == 2
    assert len(select_training_subset(list(range(10)), 1.0)) == 10
    assert len(select_training_subset(list(range(43285)), 0.2)) == 8657


@given(st.integers(0, 5000), st.integers(1, 100))
def test_subset_is_ceil_prefix(n, pct):
    sub = select_training_subset(list(range(n)), pct / 100)
    assert sub == list(range(-(-n * pct // 100)))


def test_norm_stats_examples():
    single = compute_norm_stats(_table([[1, 2, 3, 4, 5]]))
    assert single.mean == (1, 2, 3, 4, 5) and single.std == (1.0,) * 5
    s = compute_norm_stats(_table([[0, 1, 1, 1, 1], [2, 1, 1, 1, 1]]))
    assert s.mean[0] == 1.0 and s.std[0] == 1.0 and s.std[1] == 1.0


def test_normalize_examples():
    stats = NormStats([1, 2, 3, 4, 5], [2, 2, 2, 2, 0.5])
    assert normalize([1, 2, 3, 4, 5], stats).tolist() == [0.0] * 5
    assert normalize([3, 4, 5, 6, 5.5], stats).tolist() == [1.0] * 5


@given(st.lists(st.floats(-1e6, 1e6), min_size=5, max_size=5), st.lists(st.floats(1e-3, 1e3), min_size=5, max_size=5))
def test_denormalize_inverts(v, std):
    stats = NormStats([0.5] * 5, std)
    back = denormalize(normalize(v, stats), stats)
    assert np.allclose(back, v, rtol=1e-12, atol=1e-9)


def test_init_centroids():
    pts = np.array([[1.0], [2.0], [3.0], [4.0]])
    assert init_centroids(pts, 3).tolist() == [[1.0], [2.0], [3.0]]
    assert init_centroids(pts, 1).tolist() == [[1.0]]
    assert init_centroids(np.array([[5.0], [5.0]]), 2).tolist() == [[5.0], [5.0]]
    with pytest.raises(TrainingError):
        init_centroids(pts, 5)


def test_assign_examples(backend):
    cents = [[0.0] * 5, [9.0] * 5, [1.0, 2.0, 3.0, 4.0, 5.0]]
    assert assign([1.0, 2.0, 3.0, 4.0, 5.0], cents) == (2, 0.0)
    assert assign([1.0, 0, 0, 0, 0], [[0.0] * 5, [2.0, 0, 0, 0, 0]])[0] == 0
    assert assign([1.0, 0, 0, 0, 0], [[0.0] * 5, [3.0, 0, 0, 0, 0]]) == (0, 1.0)


@given(
    st.lists(st.floats(-100, 100), min_size=2, max_size=2),
    st.lists(st.lists(st.floats(-100, 100), min_size=2, max_size=2), min_size=1, max_size=4),
)
def test_assign_invariant_under_farther_centroid(z, cents):
    c, d = assign(z, cents)
    far = [z[0] + d + 1.0, z[1]]
    assert assign(z, cents + [far])[0] == c


def test_lloyd_zero_iterations_identity(backend):
    c = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert lloyd_iterate(np.random.default_rng(0).normal(size=(10, 2)), c, 0).tolist() == c.tolist()


def test_lloyd_fixed_point(backend):
    c = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert lloyd_iterate(np.repeat(c[:1], 7, axis=0), c, 5).tolist() == c.tolist()


def _instance(rnd):
    n = rnd.randint(1, 50)
    dim = rnd.randint(1, 3)
    k = rnd.randint(1, min(3, n))
    grid = rnd.random() < 0.3
    pts = [[float(rnd.randint(-3, 3)) if grid else rnd.gauss(0, 1) for _ in range(dim)] for _ in range(n)]
    return pts, pts[:k]


def test_lloyd_matches_reference(backend):
    rnd = random.Random(1234)
    for _ in range(200):
        pts, init = _instance(rnd)
        got = lloyd_iterate(np.array(pts), np.array(init), 3)
        assert got.tolist() == lloyd_reference(pts, init, 3)


def test_objective_never_increases(backend):
    rnd = random.Random(99)
    for _ in range(200):
        pts, init = _instance(rnd)
        cents = np.array(init)
        prev = objective(pts, cents)
        for _ in range(3):
            cents = lloyd_iterate(np.array(pts), cents, 1)
            cur = objective(pts, cents)
            assert cur <= prev + 1e-12 * max(1.0, prev)
            prev = cur
        assert math.isclose(prev, wcss_reference(pts, cents.tolist()), rel_tol=1e-12, abs_tol=1e-12)


def test_threshold_examples():
    assert compute_threshold(list(range(1, 101)), 95, 1) == 95.0
    assert compute_threshold([2.5], 37.0, 3.0) == 7.5
    assert compute_threshold([4, 1, 3, 2], 100) == 4
    d = [0.3, 0.1, 0.9, 0.2]
    assert compute_threshold(d, 95, 2.0) == 2 * compute_threshold(d, 95, 1.0)


@given(
    st.lists(st.floats(0, 1e6), min_size=1, max_size=200),
    st.floats(0.01, 100.0),
)
def test_threshold_matches_oracle(d, p):
    assert compute_threshold(d, p) == nearest_rank_reference(d, p)


@given(st.lists(st.floats(0, 1e6), min_size=1, max_size=50), st.floats(0.01, 99.0), st.floats(0.01, 1.0))
def test_threshold_monotone_in_percentile(d, p, dp):
    assert compute_threshold(d, p) <= compute_threshold(d, min(p + dp, 100.0))
    assert compute_threshold(d, 100) == max(d)


def _blobs(seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal([0, 0, 0, 0, 0], 0.05, size=(40, 5))
    b = rng.normal([5, 5, 5, 5, 5], 0.05, size=(40, 5))
    c = np.tile([10.0, 0.0, 10.0, 0.0, 10.0], (40, 1))
    rows = np.empty((120, 5))
    rows[0::3], rows[1::3], rows[2::3] = a, b, c
    return rows, (a, b, c)


def test_train_recovers_blobs(backend):
    rows, groups = _blobs()
    model = train(_table(rows), TrainConfig(train_fraction=1.0))
    stats = model.norm
    for g in groups:
        true = normalize(g, stats).mean(axis=0)
        gaps = [np.linalg.norm(np.array(c) - true) for c in model.centroids]
        assert min(gaps) < 0.2


def test_train_degenerate_threshold():
    with pytest.raises(TrainingError, match="degenerate"):
        train(_table([[1.0, 2.0, 3.0, 4.0, 5.0]] * 20), TrainConfig(train_fraction=1.0))


def test_train_too_few_records():
    with pytest.raises(TrainingError):
        train(_table(np.eye(5)[:2]), TrainConfig(train_fraction=1.0))


def test_train_rejects_nonfinite():
    rows = np.random.default_rng(1).normal(size=(30, 5))
    rows[3, 2] = np.nan
    with pytest.raises(NonFiniteFeature):
        train(_table(rows))


def test_train_is_deterministic(backend):
    rows, _ = _blobs(3)
    a = model_format.serialize(train(_table(rows)))
    b = model_format.serialize(train(_table(rows)))
    assert a == b


def test_infer_rules():
    model = KMeansModel([[0.0] * 5], NormStats([0.0] * 5, [1.0] * 5), threshold=8.99679)
    v = infer(_table([[0.0] * 5, [9.0, 0, 0, 0, 0], [8.99679, 0, 0, 0, 0]]), model)
    assert v.distance[0] == 0.0 and not v.is_anomaly[0]
    assert v.is_anomaly[1]
    assert not v.is_anomaly[2]


def test_training_flags_at_most_tail(backend):
    rows = np.random.default_rng(5).normal(size=(400, 5))
    cfg = TrainConfig(train_fraction=1.0)
    model = train(_table(rows), cfg)
    v = infer(_table(rows), model)
    n = len(rows)
    assert v.flagged <= n - math.ceil(0.95 * n)


def test_model_shape_is_checked_by_validate():
    bad = KMeansModel([[0.0, 1.0]], NormStats([0.0], [1.0]), 1.0, feature_names=("a",))
    with pytest.raises(model_format.ParseError):
        model_format.validate(bad)
    m = KMeansModel([[0.0] * 5], NormStats([0.0] * 5, [1.0] * 5), 2.0)
    assert m.k == 1 and m.dim == 5 and m.feature_names == FEATURE_NAMES


def test_lloyd_memory_is_fixed():
    # Storage must not grow with the iteration count.
    from diol import _kernels_py

    Z = np.random.default_rng(0).normal(size=(300, 5))
    C = Z[:3].copy()

    def peak(iterations):
        _kernels_py.lloyd(Z, C, 1)
        tracemalloc.start()
        _kernels_py.lloyd(Z, C, iterations)
        p = tracemalloc.get_traced_memory()[1]
        tracemalloc.stop()
        return p

    p3, p30 = peak(3), peak(30)
    assert p30 <= p3 * 1.05 + 2048
