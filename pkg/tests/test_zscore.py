import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from diol.features import FeatureTable
from diol.kmeans import NormStats, TrainConfig, compute_norm_stats, select_training_subset
from diol.zscore import ZScoreModel, infer_zscore, train_zscore


def _table(rows):
    rows = np.asarray(rows, dtype=np.float64)
    return FeatureTable(np.arange(len(rows)), rows)


def test_constant_training_gives_unit_std():
    m = train_zscore(_table([[1.0, 2.0, 3.0, 4.0, 5.0]] * 10))
    assert m.norm.std == (1.0,) * 5


def test_shares_kmeans_stats():
    t = _table(np.random.default_rng(0).normal(size=(100, 5)))
    assert train_zscore(t, 0.2).norm == compute_norm_stats(select_training_subset(t, TrainConfig().train_fraction))


def test_threshold_stored_verbatim():
    assert train_zscore(_table(np.eye(5)), z_threshold=3.0).z_threshold == 3.0


def test_scoring_rules():
    m = ZScoreModel(NormStats([0.0] * 5, [1.0] * 5), 3.0)
    v = infer_zscore(_table([[0.0] * 5, [0, 0, 4.0, 0, 0], [0, 0, 0, -3.0, 0]]), m)
    assert v.distance.tolist() == [0.0, 4.0, 3.0]
    assert v.is_anomaly.tolist() == [False, True, False]
    assert v.cluster.tolist() == [0, 0, 0]


@given(
    st.lists(st.lists(st.floats(-50, 50), min_size=5, max_size=5), min_size=1, max_size=30),
    st.floats(0.5, 5.0),
    st.floats(0.0, 5.0),
)
def test_threshold_monotonicity_and_definition(rows, z, dz):
    stats = NormStats([1.0, -2.0, 0.5, 0.0, 3.0], [2.0, 0.5, 1.0, 4.0, 0.25])
    t = _table(rows)
    low = infer_zscore(t, ZScoreModel(stats, z))
    high = infer_zscore(t, ZScoreModel(stats, z + dz))
    assert not np.any(high.is_anomaly & ~low.is_anomaly)
    dev = np.abs(np.asarray(rows) - np.array(stats.mean)) / np.array(stats.std)
    assert low.is_anomaly.tolist() == (dev > z).any(axis=1).tolist()


def test_invalid_model():
    with pytest.raises(ValueError):
        ZScoreModel(NormStats([0.0], [1.0]), 0.0)
