"""Isolation forest over tumbling windows.

Events accumulate in a buffer; when it reaches `window` the previous
forest is discarded and a fresh one is fit on the buffered window (each
tree on a without-replacement subsample, height-limited at
ceil(log2(subsample))). Events are scored by the most recent forest with
the standard 2^(-E[h]/c(n)) path-length score; before any forest exists
the score is the no-information constant 0.5. No drift detection: refits
happen on window boundaries only.

All randomness (subsample indices, split dims, split points) is drawn
into buffers up front, so tree construction consumes identical numbers on
either kernel backend.
"""

from __future__ import annotations

import math

import numpy as np

from .._backend import jit, pick
from ..core import Detector
from ..params import IForestASDParams, validate
from ._util import child_rng

EULER_GAMMA = 0.5772156649015329


def average_path_length(n: int) -> float:
    """Expected unsuccessful-search depth c(n) of a BST with n points."""
    if n <= 1:
        return 0.0
    if n == 2:
        return 1.0
    return 2.0 * (math.log(n - 1.0) + EULER_GAMMA) - 2.0 * (n - 1.0) / n


def _build_tree(xw, idx, u, height_limit, feature, threshold, left, right, size):
    """Fill node arrays for one tree; returns node count.

    idx is the tree's subsample (permuted in place while partitioning);
    u supplies two uniforms per split attempt: dim choice and cut point.
    Iterative, left child first, so draw consumption is reproducible.
    """
    d = xw.shape[1]
    cap = feature.shape[0]
    # stack rows: node, start, end, depth
    stack = np.empty((cap, 4), dtype=np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = idx.shape[0]
    stack[0, 3] = 0
    top = 1
    next_node = 1
    used = 0
    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]
        n = end - start
        make_leaf = depth >= height_limit or n <= 1
        q = -1
        cut = 0.0
        if not make_leaf:
            q = int(u[used] * d)
            if q >= d:
                q = d - 1
            lo = xw[idx[start], q]
            hi = lo
            for i in range(start + 1, end):
                v = xw[idx[i], q]
                if v < lo:
                    lo = v
                elif v > hi:
                    hi = v
            cut = lo + u[used + 1] * (hi - lo)
            used += 2
            if hi == lo:
                make_leaf = True
        if make_leaf:
            feature[node] = -1
            threshold[node] = 0.0
            left[node] = -1
            right[node] = -1
            size[node] = n
            continue
        # partition segment: < cut to the front
        i = start
        j = end - 1
        while i <= j:
            if xw[idx[i], q] < cut:
                i += 1
            else:
                t = idx[i]
                idx[i] = idx[j]
                idx[j] = t
                j -= 1
        mid = i
        feature[node] = q
        threshold[node] = cut
        lc = next_node
        rc = next_node + 1
        next_node += 2
        left[node] = lc
        right[node] = rc
        size[node] = n
        stack[top, 0] = rc
        stack[top, 1] = mid
        stack[top, 2] = end
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = lc
        stack[top, 1] = start
        stack[top, 2] = mid
        stack[top, 3] = depth + 1
        top += 1
    return next_node


_build_tree_jit = jit(_build_tree)
_build_tree_py = _build_tree


def _path_lengths_loop(feature, threshold, left, right, size, c_table, x, out):
    for t in range(feature.shape[0]):
        node = 0
        depth = 0
        while feature[t, node] >= 0:
            if x[feature[t, node]] < threshold[t, node]:
                node = left[t, node]
            else:
                node = right[t, node]
            depth += 1
        out[t] = depth + c_table[size[t, node]]


_path_lengths_jit = jit(_path_lengths_loop)


def _path_lengths_py(feature, threshold, left, right, size, c_table, x, out):
    n_trees = feature.shape[0]
    rows = np.arange(n_trees)
    node = np.zeros(n_trees, dtype=np.int64)
    depth = np.zeros(n_trees, dtype=np.int64)
    active = feature[rows, node] >= 0
    while active.any():
        q = feature[rows, node]
        qa = np.maximum(q, 0)
        go_left = x[qa] < threshold[rows, node]
        nxt = np.where(go_left, left[rows, node], right[rows, node])
        node = np.where(active, nxt, node)
        depth = np.where(active, depth + 1, depth)
        active = feature[rows, node] >= 0
    out[:] = depth + c_table[size[rows, node]]


path_lengths = pick(_path_lengths_jit, _path_lengths_py)


class IForestASD(Detector):
    kind = "IForestASD"

    def __init__(self, params: IForestASDParams = None, seed: int = 0):
        super().__init__(seed)
        self.params = params or IForestASDParams()
        validate(self.kind, self.params)
        self._buf = None
        self._count = 0
        self._refits = 0
        self._forest = None  # dict of node arrays once fitted
        self._c_norm = 1.0

    def _ensure(self, d: int):
        if self._buf is None:
            self._buf = np.empty((self.params.window, d), dtype=np.float64)

    def _score(self, x):
        self._ensure(x.shape[0])
        if self._forest is None:
            return 0.5
        f = self._forest
        out = np.empty(self.params.n_trees, dtype=np.float64)
        path_lengths(
            f["feature"], f["threshold"], f["left"], f["right"], f["size"],
            f["c_table"], x, out,
        )
        return float(2.0 ** (-out.mean() / self._c_norm))

    def _learn(self, x):
        self._ensure(x.shape[0])
        self._buf[self._count] = x
        self._count += 1
        if self._count == self.params.window:
            self._fit()
            self._count = 0

    def _fit(self):
        p = self.params
        n = self._count
        sub = min(p.subsample, n)
        height_limit = max(1, math.ceil(math.log2(sub))) if sub > 1 else 1
        cap = 4 * sub + 4
        feature = np.empty((p.n_trees, cap), dtype=np.int64)
        threshold = np.empty((p.n_trees, cap), dtype=np.float64)
        left = np.empty((p.n_trees, cap), dtype=np.int64)
        right = np.empty((p.n_trees, cap), dtype=np.int64)
        size = np.empty((p.n_trees, cap), dtype=np.int64)
        build = _build_tree_jit  # == _build_tree uncompiled when numba is off
        rng = child_rng(self.seed, 2, self._refits)
        xw = self._buf[:n]
        for t in range(p.n_trees):
            idx = rng.choice(n, size=sub, replace=False).astype(np.int64)
            u = rng.random(2 * cap)
            build(xw, idx, u, height_limit, feature[t], threshold[t],
                  left[t], right[t], size[t])
        c_table = np.array([average_path_length(i) for i in range(sub + 1)])
        self._forest = {
            "feature": feature, "threshold": threshold, "left": left,
            "right": right, "size": size, "c_table": c_table,
        }
        self._c_norm = average_path_length(sub)
        self._refits += 1

    @property
    def stored_points(self):
        return self._count
