"""Autoencoder-ensemble detector with correlation-based feature grouping.

Three phases. First `grace_feature_map` events feed incremental
correlation statistics; at the boundary, features are grouped by
single-linkage clustering of correlation distance, splitting the
dendrogram until every group has at most max_autoencoder_size features.
Each group then gets a small tied-weight autoencoder (one hidden layer of
ceil(hidden_ratio*m) sigmoid units, per-feature running min-max input
normalization); their reconstruction RMSEs feed one output autoencoder.
During the next `grace_training` events everything trains while the
emitted score stays 0; afterwards each event is scored by a pure forward
pass (output RMSE) and then trained on, so learning continues online.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.cluster.hierarchy import linkage, to_tree
from scipy.spatial.distance import squareform
from scipy.special import expit

from .._backend import jit, pick
from ..core import Detector
from ..params import KitNetParams, validate
from ._util import child_rng

NORM_EPS = 1e-16


def _ae_train_loop(w, hb, vb, xt, lr):
    v, h = w.shape
    y = np.empty(h)
    for j in range(h):
        s = hb[j]
        for i in range(v):
            s += xt[i] * w[i, j]
        y[j] = 1.0 / (1.0 + math.exp(-s))
    z = np.empty(v)
    for i in range(v):
        s = vb[i]
        for j in range(h):
            s += y[j] * w[i, j]
        z[i] = 1.0 / (1.0 + math.exp(-s))
    lh2 = np.empty(v)
    sq = 0.0
    for i in range(v):
        lh2[i] = xt[i] - z[i]
        sq += lh2[i] * lh2[i]
    lh1 = np.empty(h)
    for j in range(h):
        s = 0.0
        for i in range(v):
            s += lh2[i] * w[i, j]
        lh1[j] = s * y[j] * (1.0 - y[j])
    for i in range(v):
        for j in range(h):
            w[i, j] += lr * (xt[i] * lh1[j] + lh2[i] * y[j])
    for j in range(h):
        hb[j] += lr * lh1[j]
    for i in range(v):
        vb[i] += lr * lh2[i]
    return math.sqrt(sq / v)


_ae_train_jit = jit(_ae_train_loop)


def _ae_train_py(w, hb, vb, xt, lr):
    y = expit(xt @ w + hb)
    z = expit(y @ w.T + vb)
    lh2 = xt - z
    lh1 = (lh2 @ w) * y * (1.0 - y)
    w += lr * (np.outer(xt, lh1) + np.outer(lh2, y))
    hb += lr * lh1
    vb += lr * lh2
    return float(np.sqrt(np.mean(lh2 * lh2)))


ae_train = pick(_ae_train_jit, _ae_train_py)


def _ae_exec_loop(w, hb, vb, xt):
    v, h = w.shape
    y = np.empty(h)
    for j in range(h):
        s = hb[j]
        for i in range(v):
            s += xt[i] * w[i, j]
        y[j] = 1.0 / (1.0 + math.exp(-s))
    sq = 0.0
    for i in range(v):
        s = vb[i]
        for j in range(h):
            s += y[j] * w[i, j]
        z = 1.0 / (1.0 + math.exp(-s))
        d = xt[i] - z
        sq += d * d
    return math.sqrt(sq / v)


_ae_exec_jit = jit(_ae_exec_loop)


def _ae_exec_py(w, hb, vb, xt):
    y = expit(xt @ w + hb)
    z = expit(y @ w.T + vb)
    d = xt - z
    return float(np.sqrt(np.mean(d * d)))


ae_exec = pick(_ae_exec_jit, _ae_exec_py)


class CorrStats:
    """Streaming per-feature correlation accumulator."""

    def __init__(self, d: int):
        self.n = 0
        self.lin = np.zeros(d)
        self.res = np.zeros(d)
        self.res_sq = np.zeros(d)
        self.cross = np.zeros((d, d))

    def update(self, x: np.ndarray) -> None:
        self.n += 1
        self.lin += x
        rt = x - self.lin / self.n
        self.res += rt
        self.res_sq += rt * rt
        self.cross += np.outer(rt, rt)

    def corr_distance(self) -> np.ndarray:
        denom = np.sqrt(np.outer(self.res_sq, self.res_sq))
        denom[denom <= 0] = 1.0  # constant features sit at distance 1
        dist = 1.0 - self.cross / denom
        np.fill_diagonal(dist, 0.0)
        return np.clip(dist, 0.0, 2.0)


def cluster_features(dist: np.ndarray, max_size: int) -> list:
    """Split the single-linkage dendrogram until groups fit max_size."""
    d = dist.shape[0]
    if d <= max_size:
        return [list(range(d))]
    tree = to_tree(linkage(squareform(dist, checks=False), method="single"))

    def split(node):
        if node.count <= max_size:
            return [node.pre_order()]
        return split(node.left) + split(node.right)

    return split(tree)


class _AutoEncoder:
    def __init__(self, n_visible: int, hidden_ratio: float, rng):
        n_hidden = max(1, math.ceil(hidden_ratio * n_visible))
        a = 1.0 / n_visible
        self.w = rng.uniform(-a, a, size=(n_visible, n_hidden))
        self.hb = np.zeros(n_hidden)
        self.vb = np.zeros(n_visible)
        self.norm_min = np.full(n_visible, np.inf)
        self.norm_max = np.full(n_visible, -np.inf)

    def _normalize(self, x):
        return (x - self.norm_min) / (self.norm_max - self.norm_min + NORM_EPS)

    def train(self, x, lr):
        np.minimum(self.norm_min, x, out=self.norm_min)
        np.maximum(self.norm_max, x, out=self.norm_max)
        return float(ae_train(self.w, self.hb, self.vb, self._normalize(x), lr))

    def execute(self, x):
        return float(ae_exec(self.w, self.hb, self.vb, self._normalize(x)))


class KitNet(Detector):
    kind = "KitNet"

    def __init__(self, params: KitNetParams = None, seed: int = 0):
        super().__init__(seed)
        self.params = params or KitNetParams()
        validate(self.kind, self.params)
        self._stats = None
        self._clusters = None
        self._tails = None
        self._output = None

    def _ensure(self, d: int):
        if self._stats is None:
            self._stats = CorrStats(d)

    def _build(self):
        p = self.params
        self._clusters = cluster_features(
            self._stats.corr_distance(), p.max_autoencoder_size
        )
        self._tails = [
            _AutoEncoder(len(idx), p.hidden_ratio, child_rng(self.seed, 6, i))
            for i, idx in enumerate(self._clusters)
        ]
        self._output = _AutoEncoder(
            len(self._clusters), p.hidden_ratio, child_rng(self.seed, 7)
        )
        self._cluster_idx = [np.asarray(idx, dtype=np.intp) for idx in self._clusters]
        self._stats = None

    def _score(self, x):
        self._ensure(x.shape[0])
        p = self.params
        if self._output is None or self.n_seen < p.grace_feature_map + p.grace_training:
            return 0.0
        rmses = np.array(
            [t.execute(x[idx]) for t, idx in zip(self._tails, self._cluster_idx)]
        )
        return self._output.execute(rmses)

    def _learn(self, x):
        self._ensure(x.shape[0])
        p = self.params
        if self._output is None:
            self._stats.update(x)
            if self.n_seen + 1 == p.grace_feature_map:
                self._build()
            return
        lr = p.learning_rate
        rmses = np.array(
            [t.train(x[idx], lr) for t, idx in zip(self._tails, self._cluster_idx)]
        )
        self._output.train(rmses, lr)
