"""Streaming half-space trees.

An ensemble of perfect binary trees over a randomized workspace around
[0,1]^D. Each node keeps two mass counters: a reference profile scored
against, and a latest profile being filled; every `window` events the
latest profile becomes the reference. Scoring walks each tree until it
hits a leaf or a node whose reference mass falls to at most 0.1*window,
and contributes mass * 2^depth there; the final score is the negated sum,
so sparse regions score high. Inputs are expected minmax-scaled (the
pipeline pairs this detector with the minmax scaler).
"""

from __future__ import annotations

import numpy as np

from .._backend import jit, pick
from ..core import Detector, InvalidParameterError
from ..params import HSTreeParams, validate
from ._util import child_rng


def _score_walk_loop(dims, vals, r, n_internal, limit, x):
    total = 0
    for t in range(dims.shape[0]):
        node = 0
        k = 0
        while node < n_internal and r[t, node] > limit:
            if x[dims[t, node]] < vals[t, node]:
                node = 2 * node + 1
            else:
                node = 2 * node + 2
            k += 1
        total += r[t, node] << k
    return total


_score_walk_jit = jit(_score_walk_loop)


def _score_walk_py(dims, vals, r, n_internal, limit, x):
    n_trees = dims.shape[0]
    rows = np.arange(n_trees)
    node = np.zeros(n_trees, dtype=np.int64)
    k = np.zeros(n_trees, dtype=np.int64)
    active = np.ones(n_trees, dtype=bool)
    contrib = np.zeros(n_trees, dtype=np.int64)
    depth = int(np.log2(n_internal + 1)) if n_internal else 0
    for _ in range(depth + 1):
        r_now = r[rows, node]
        stop = active & ((node >= n_internal) | (r_now <= limit))
        contrib[stop] = r_now[stop] << k[stop]
        active &= ~stop
        if not active.any():
            break
        q = dims[rows, np.minimum(node, n_internal - 1)]
        v = vals[rows, np.minimum(node, n_internal - 1)]
        left = x[q] < v
        nxt = np.where(left, 2 * node + 1, 2 * node + 2)
        node = np.where(active, nxt, node)
        k = np.where(active, k + 1, k)
    return int(contrib.sum())


score_walk = pick(_score_walk_jit, _score_walk_py)


def _learn_walk_loop(dims, vals, l, n_internal, x):
    for t in range(dims.shape[0]):
        node = 0
        l[t, 0] += 1
        while node < n_internal:
            if x[dims[t, node]] < vals[t, node]:
                node = 2 * node + 1
            else:
                node = 2 * node + 2
            l[t, node] += 1


_learn_walk_jit = jit(_learn_walk_loop)


def _learn_walk_py(dims, vals, l, n_internal, x):
    n_trees = dims.shape[0]
    rows = np.arange(n_trees)
    node = np.zeros(n_trees, dtype=np.int64)
    l[rows, node] += 1
    depth = int(np.log2(n_internal + 1)) if n_internal else 0
    for _ in range(depth):
        q = dims[rows, node]
        v = vals[rows, node]
        node = np.where(x[q] < v, 2 * node + 1, 2 * node + 2)
        l[rows, node] += 1


learn_walk = pick(_learn_walk_jit, _learn_walk_py)


class HSTree(Detector):
    kind = "HSTree"

    def __init__(self, params: HSTreeParams = None, seed: int = 0):
        super().__init__(seed)
        self.params = params or HSTreeParams()
        validate(self.kind, self.params)
        if self.params.depth > 24:
            raise InvalidParameterError("depth", "perfect trees past depth 24 exhaust memory")
        self._limit = 0.1 * self.params.window
        self._dims = None
        self._vals = None
        self._r = None
        self._l = None
        self._n_internal = 2**self.params.depth - 1

    def _ensure(self, d: int):
        if self._dims is not None:
            return
        p = self.params
        n_internal = self._n_internal
        n_nodes = 2 ** (p.depth + 1) - 1
        self._dims = np.empty((p.n_trees, max(n_internal, 1)), dtype=np.int64)
        self._vals = np.empty((p.n_trees, max(n_internal, 1)), dtype=np.float64)
        for t in range(p.n_trees):
            rng = child_rng(self.seed, 1, t)
            sq = rng.random(d)
            half = 2.0 * np.maximum(sq, 1.0 - sq)
            ws_min, ws_max = sq - half, sq + half
            dims = rng.integers(0, d, size=max(n_internal, 1))
            self._dims[t] = dims
            # per-level range propagation: children inherit the parent's
            # box with one bound replaced by the midpoint
            rmin = np.empty((n_nodes, d))
            rmax = np.empty((n_nodes, d))
            rmin[0], rmax[0] = ws_min, ws_max
            for level in range(p.depth):
                idx = np.arange(2**level - 1, 2 ** (level + 1) - 1)
                q = dims[idx]
                mid = (rmin[idx, q] + rmax[idx, q]) / 2.0
                self._vals[t, idx] = mid
                left, right = 2 * idx + 1, 2 * idx + 2
                rmin[left] = rmin[idx]
                rmax[left] = rmax[idx]
                rmax[left, q] = mid
                rmin[right] = rmin[idx]
                rmax[right] = rmax[idx]
                rmin[right, q] = mid
        self._r = np.zeros((p.n_trees, n_nodes), dtype=np.int64)
        self._l = np.zeros((p.n_trees, n_nodes), dtype=np.int64)

    def _score(self, x):
        self._ensure(x.shape[0])
        total = score_walk(self._dims, self._vals, self._r, self._n_internal, self._limit, x)
        return float(-int(total))

    def _learn(self, x):
        self._ensure(x.shape[0])
        learn_walk(self._dims, self._vals, self._l, self._n_internal, x)
        if (self.n_seen + 1) % self.params.window == 0:
            self._r[:, :] = self._l
            self._l[:, :] = 0
