"""Storm against a brute-force all-pairs neighbor count.

The detector keeps a ring buffer; the oracle here keeps a plain list and
counts neighbors the slow way, so every windowing or indexing bug shows
up as an integer mismatch.
"""

import numpy as np
import pytest

from anomstream import make_detector
from anomstream.params import StormParams


def brute_counts(X, window, radius):
    """Neighbor count of each event against the previous `window` events."""
    r2 = radius * radius
    out = []
    held = []
    for x in X:
        c = 0
        for y in held:
            d = x - y
            if float(np.dot(d, d)) <= r2:
                c += 1
        out.append(c)
        held.append(x)
        if len(held) > window:
            held.pop(0)
    return np.array(out, dtype=np.int64)


def detector_counts(X, window, radius):
    det = make_detector("Storm", StormParams(window=window, radius=radius), seed=0)
    return np.array([-int(det.process_one(x)) for x in X], dtype=np.int64)


@pytest.mark.parametrize("window,radius", [(50, 0.8), (2, 0.8), (200, 2.0)])
def test_counts_match_brute_force(window, radius):
    rng = np.random.default_rng(7)
    X = rng.normal(size=(600, 4))
    got = detector_counts(X, window, radius)
    want = brute_counts(X, window, radius)
    np.testing.assert_array_equal(got, want)


def test_counts_match_on_clustered_stream():
    # dense data so counts are large and eviction errors actually matter
    rng = np.random.default_rng(8)
    X = rng.normal(scale=0.3, size=(500, 3))
    got = detector_counts(X, 60, 0.5)
    want = brute_counts(X, 60, 0.5)
    assert want.max() > 10  # the stream is actually dense
    np.testing.assert_array_equal(got, want)


def test_empty_window_scores_zero():
    det = make_detector("Storm", StormParams(window=10, radius=1.0), seed=0)
    assert det.score_one(np.zeros(3)) == 0.0


def test_score_excludes_current_event():
    det = make_detector("Storm", StormParams(window=10, radius=1.0), seed=0)
    x = np.ones(2)
    scores = [det.process_one(x) for _ in range(5)]
    assert scores == [0.0, -1.0, -2.0, -3.0, -4.0]


def test_duplicate_count_saturates_at_window():
    det = make_detector("Storm", StormParams(window=3, radius=1.0), seed=0)
    x = np.ones(2)
    scores = [det.process_one(x) for _ in range(6)]
    assert scores == [0.0, -1.0, -2.0, -3.0, -3.0, -3.0]


def test_radius_boundary_is_inclusive():
    # integer coordinates keep squared distances exact in float64
    det = make_detector("Storm", StormParams(window=10, radius=1.0), seed=0)
    det.learn_one(np.array([0.0, 0.0]))
    det.learn_one(np.array([1.0, 0.0]))  # distance exactly 1.0
    det.learn_one(np.array([1.0, 1.0]))  # distance sqrt(2)
    assert det.score_one(np.array([0.0, 0.0])) == -2.0


def test_eviction_drops_oldest_first():
    det = make_detector("Storm", StormParams(window=2, radius=0.5), seed=0)
    det.learn_one(np.array([0.0]))
    det.learn_one(np.array([10.0]))
    det.learn_one(np.array([20.0]))  # evicts 0.0
    assert det.score_one(np.array([0.0])) == 0.0
    assert det.score_one(np.array([10.0])) == -1.0
    assert det.score_one(np.array([20.0])) == -1.0
