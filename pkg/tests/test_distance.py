import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from helpers import traj
from sqetrack.distance import feature_distance, inter_distances, intra_distances
from sqetrack.errors import ValidationError
from sqetrack.trackmodel import Detection, Trajectory


def loop_norm(f, g):
    return math.sqrt(sum((a - b) ** 2 for a, b in zip(f, g)))


def test_feature_distance_examples():
    assert feature_distance([0, 0], [3, 4]) == 5.0
    assert feature_distance([1, 2, 3], [1, 2, 3]) == 0.0


def test_feature_distance_rejects_mismatched_dims():
    with pytest.raises(ValidationError):
        feature_distance([0, 0], [0, 0, 0])


finite = st.floats(-1e3, 1e3, allow_nan=False)


@given(arrays(float, 5, elements=finite), arrays(float, 5, elements=finite))
def test_feature_distance_matches_loop_and_is_symmetric(f, g):
    d = feature_distance(f, g)
    assert d == pytest.approx(loop_norm(f, g), rel=1e-12, abs=1e-12)
    assert d == feature_distance(g, f)
    assert d >= 0


def test_intra_counts_and_order():
    rng = np.random.default_rng(0)
    f = rng.standard_normal((6, 4))
    s = intra_distances(traj(1, f))
    expected = [loop_norm(f[i], f[j]) for i, j in itertools.combinations(range(6), 2)]
    assert len(s) == 15 and s.source_pair_count == 15 and not s.subsampled
    np.testing.assert_allclose(s.values, expected, rtol=1e-12)


def test_intra_of_single_detection_is_empty():
    assert len(intra_distances(traj(1, [[1.0, 2.0]]))) == 0


def test_inter_counts_and_argument_symmetry():
    rng = np.random.default_rng(1)
    a = traj(1, rng.standard_normal((3, 4)))
    b = traj(2, rng.standard_normal((5, 4)), start=10)
    ab, ba = inter_distances(a, b), inter_distances(b, a)
    assert len(ab) == 15 and ab.ids == (1, 2) == ba.ids
    np.testing.assert_array_equal(ab.values, ba.values)
    expected = [loop_norm(x, y) for x in a.feature_matrix for y in b.feature_matrix]
    np.testing.assert_allclose(ab.values, expected, rtol=1e-12)


def test_inter_needs_distinct_trajectories():
    a = traj(1, [[0.0]])
    with pytest.raises(ValidationError):
        inter_distances(a, a)


def test_synthetic_detections_are_skipped():
    dets = (Detection(0, (0, 0, 1, 1), 1, np.zeros(2)),
            Detection(1, (0, 0, 1, 1), 1, None, synthetic=True),
            Detection(2, (0, 0, 1, 1), 1, np.ones(2)))
    s = intra_distances(Trajectory(1, dets))
    np.testing.assert_allclose(s.values, [math.sqrt(2)])


def test_cap_subsamples_deterministically():
    rng = np.random.default_rng(2)
    t = traj(4, rng.standard_normal((60, 3)))
    full = intra_distances(t, max_pairs=None)
    a = intra_distances(t, max_pairs=100, seed=5)
    b = intra_distances(t, max_pairs=100, seed=5)
    c = intra_distances(t, max_pairs=100, seed=6)
    assert a.subsampled and len(a) == 100 and a.source_pair_count == 1770
    np.testing.assert_array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    assert set(a.values) <= set(full.values)


def test_cap_above_total_keeps_everything():
    t = traj(1, np.arange(10.0)[:, None])
    s = intra_distances(t, max_pairs=45)
    assert len(s) == 45 and not s.subsampled
