"""Randomized subspace grid hashing.

Each component picks a locality width f, a random subspace, and random
shifts, then quantizes the (minmax-normalized) input into a grid cell.
Cells hash into several counting tables; a component's evidence is the
minimum count across tables (collision-resistant), and the score is
-(mean of log(1 + min-count)), computed before the counts absorb the
event. Per-dimension min/max come from a warm-up prefix of sample_size
events and freeze afterwards; normalized values clamp to [0, 1].
"""

from __future__ import annotations

import math

import numpy as np

from ..core import Detector
from ..params import RSHashParams, validate
from . import _sketch
from ._util import child_rng


class RSHash(Detector):
    kind = "RSHash"

    def __init__(self, params: RSHashParams = None, seed: int = 0):
        super().__init__(seed)
        self.params = params or RSHashParams()
        validate(self.kind, self.params)
        self._f = None
        self._subspace = None  # (m, rmax) padded dim indices
        self._lengths = None
        self._alpha = None  # (m, rmax) shifts, 0 at padding
        self._seeds = np.array(
            [_sketch.table_seed(self.seed, t) for t in range(self.params.n_hash_tables)],
            dtype=np.uint64,
        )
        self._tables = np.zeros(
            (self.params.n_hash_tables, self.params.table_width), dtype=np.int64
        )
        self._min = None
        self._max = None
        self._warm = 0

    def _ensure(self, d: int):
        if self._f is not None:
            return
        p = self.params
        s = p.sample_size
        rng = child_rng(self.seed, 3)
        root = 1.0 / math.sqrt(s)
        self._f = rng.uniform(min(root, 0.5), max(1.0 - root, 0.5), p.n_components)
        lengths = np.empty(p.n_components, dtype=np.int64)
        dims_list = []
        for i in range(p.n_components):
            base = max(2.0, 1.0 / self._f[i])
            log_s = math.log(s) / math.log(base)
            lo = int(math.floor(1.0 + 0.5 * log_s))
            hi = int(math.floor(log_s))
            if hi < lo:
                hi = lo
            r = int(rng.integers(lo, hi + 1))
            r = max(1, min(r, d))
            dims_list.append(rng.choice(d, size=r, replace=False).astype(np.int64))
            lengths[i] = r
        rmax = int(lengths.max())
        self._subspace = np.zeros((p.n_components, rmax), dtype=np.int64)
        self._alpha = np.zeros((p.n_components, rmax), dtype=np.float64)
        for i, dims in enumerate(dims_list):
            self._subspace[i, : lengths[i]] = dims
            self._alpha[i, : lengths[i]] = rng.uniform(0.0, self._f[i], size=lengths[i])
        self._lengths = lengths
        self._min = np.full(d, np.inf)
        self._max = np.full(d, -np.inf)

    def _normalize(self, x):
        if self._warm == 0:
            return np.zeros_like(x)
        rng_ = self._max - self._min
        out = np.zeros_like(x)
        nz = rng_ > 0
        out[nz] = (x[nz] - self._min[nz]) / rng_[nz]
        return np.clip(out, 0.0, 1.0)

    def _cells(self, x):
        xn = self._normalize(x)
        vals = xn[self._subspace] + self._alpha
        return np.floor(vals / self._f[:, None]).astype(np.int64)

    def _slots(self, x):
        cells = self._cells(x)
        return _sketch.hash_rows_with(
            _sketch.hash_rows, cells, self._lengths, self._seeds, self.params.table_width
        )

    def _score(self, x):
        self._ensure(x.shape[0])
        slots = self._slots(x)
        t_idx = np.arange(slots.shape[0])[:, None]
        counts = self._tables[t_idx, slots].min(axis=0)
        return float(-np.log1p(counts).mean())

    def _learn(self, x):
        self._ensure(x.shape[0])
        if self._warm < self.params.sample_size:
            np.minimum(self._min, x, out=self._min)
            np.maximum(self._max, x, out=self._max)
            self._warm += 1
        slots = self._slots(x)
        for t in range(slots.shape[0]):
            np.add.at(self._tables[t], slots[t], 1)
