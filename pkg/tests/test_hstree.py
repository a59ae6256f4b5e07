"""Half-space trees against a set-membership mass oracle.

Node masses are recomputed by testing every event against the conjunction
of half-space constraints on the node's root path (no tree descent), so
the incremental counter updates are validated by plain geometry. Scores
are then recomposed from those masses.
"""

import numpy as np
import pytest

from anomstream import make_detector
from anomstream.core import InvalidParameterError
from anomstream.params import HSTreeParams

PARAMS = HSTreeParams(n_trees=3, depth=4, window=40)


def root_path(node):
    """(ancestor, went_left) pairs from the root down to `node`."""
    steps = []
    while node > 0:
        parent = (node - 1) // 2
        steps.append((parent, node == 2 * parent + 1))
        node = parent
    return steps[::-1]


def in_node(det, t, node, x):
    for parent, went_left in root_path(node):
        q = det._dims[t, parent]
        is_left = x[q] < det._vals[t, parent]
        if is_left != went_left:
            return False
    return True


def node_masses(det, t, events):
    n_nodes = det._r.shape[1]
    mass = np.zeros(n_nodes, dtype=np.int64)
    for node in range(n_nodes):
        mass[node] = sum(1 for x in events if in_node(det, t, node, x))
    return mass


def oracle_score(det, masses, x):
    """Recompose the score from per-tree reference masses."""
    total = 0
    for t in range(det.params.n_trees):
        node, depth = 0, 0
        while node < det._n_internal and masses[t][node] > det._limit:
            went_left = x[det._dims[t, node]] < det._vals[t, node]
            node = 2 * node + 1 if went_left else 2 * node + 2
            depth += 1
        total += int(masses[t][node]) * 2**depth
    return float(-total)


def test_latest_profile_counts_equal_membership():
    rng = np.random.default_rng(1)
    det = make_detector("HSTree", PARAMS, seed=2)
    events = list(rng.random((25, 3)))  # fewer than a window, no swap yet
    for x in events:
        det.process_one(x)
    for t in range(PARAMS.n_trees):
        np.testing.assert_array_equal(det._l[t], node_masses(det, t, events))
    assert det._r.sum() == 0


def test_reference_profile_is_previous_window():
    rng = np.random.default_rng(3)
    det = make_detector("HSTree", PARAMS, seed=2)
    first = list(rng.random((PARAMS.window, 3)))
    second = list(rng.random((18, 3)))
    for x in first + second:
        det.process_one(x)
    for t in range(PARAMS.n_trees):
        np.testing.assert_array_equal(det._r[t], node_masses(det, t, first))
        np.testing.assert_array_equal(det._l[t], node_masses(det, t, second))


def test_scores_match_mass_oracle():
    rng = np.random.default_rng(4)
    det = make_detector("HSTree", PARAMS, seed=5)
    window = list(rng.random((PARAMS.window, 4)))
    for x in window:
        det.process_one(x)
    masses = [node_masses(det, t, window) for t in range(PARAMS.n_trees)]
    # score_one only: learning the probes would eventually swap profiles
    for x in rng.random((50, 4)):
        assert det.score_one(x) == oracle_score(det, masses, x)


def test_score_constant_between_swaps():
    # scoring reads only the reference profile, so mid-window learning
    # must not move the score of a fixed probe
    rng = np.random.default_rng(6)
    det = make_detector("HSTree", PARAMS, seed=7)
    for x in rng.random((PARAMS.window, 3)):
        det.process_one(x)
    probe = np.full(3, 0.5)
    first = det.score_one(probe)
    for x in rng.random((PARAMS.window - 1, 3)):
        det.process_one(x)
        assert det.score_one(probe) == first
    det.process_one(rng.random(3))  # completes the window
    assert det._l.sum() == 0


def test_cold_start_scores_zero():
    det = make_detector("HSTree", PARAMS, seed=0)
    assert det.score_one(np.full(3, 0.2)) == 0.0


def test_far_point_scores_above_cluster_median():
    rng = np.random.default_rng(8)
    det = make_detector("HSTree", HSTreeParams(n_trees=25, depth=8, window=100), seed=9)
    cluster = 0.45 + 0.1 * rng.random((100, 2))
    for x in cluster:
        det.process_one(x)
    far = np.array([0.98, 0.98])
    cluster_scores = [det.score_one(x) for x in cluster]
    assert det.score_one(far) > float(np.median(cluster_scores))


def test_depth_beyond_guard_is_rejected():
    with pytest.raises(InvalidParameterError) as exc:
        make_detector("HSTree", HSTreeParams(n_trees=2, depth=25, window=50))
    assert exc.value.param == "depth"
