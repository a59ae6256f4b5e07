"""Sparse random projections with online equal-width histograms.

Each of k projections compresses x to a scalar; an equal-width histogram
per projection estimates that scalar's density. Score is the mean negative
log density. Bin ranges come from a warm-up buffer of the first `window`
events and are frozen afterwards (out-of-range values clamp to the edge
bins); +1 Laplace smoothing keeps every log finite. Histogram counts keep
updating for the whole stream.
"""

from __future__ import annotations

import math

import numpy as np

from .._backend import jit, pick
from ..core import Detector
from ..params import LODAParams, validate
from ._util import child_rng


def _gather_counts_loop(counts, bins, out):
    for i in range(bins.shape[0]):
        out[i] = counts[i, bins[i]]


_gather_counts_jit = jit(_gather_counts_loop)


def _gather_counts_py(counts, bins, out):
    out[:] = counts[np.arange(bins.shape[0]), bins]


gather_counts = pick(_gather_counts_jit, _gather_counts_py)


def _bump_counts_loop(counts, bins):
    for i in range(bins.shape[0]):
        counts[i, bins[i]] += 1


_bump_counts_jit = jit(_bump_counts_loop)


def _bump_counts_py(counts, bins):
    np.add.at(counts, (np.arange(bins.shape[0]), bins), 1)


bump_counts = pick(_bump_counts_jit, _bump_counts_py)


class LODA(Detector):
    kind = "LODA"

    def __init__(self, params: LODAParams = None, seed: int = 0):
        super().__init__(seed)
        self.params = params or LODAParams()
        validate(self.kind, self.params)
        self._proj = None  # (k, D)
        self._buf = None
        self._mins = None
        self._widths = None
        self._counts = None
        self._total = 0
        self._warm_score = math.log(self.params.n_bins)

    def _ensure(self, d: int):
        if self._proj is not None:
            return
        p = self.params
        nnz = p.sparsity if p.sparsity is not None else max(1, math.ceil(math.sqrt(d)))
        nnz = min(nnz, d)
        rng = child_rng(self.seed, 0)
        proj = np.zeros((p.n_projections, d), dtype=np.float64)
        for i in range(p.n_projections):
            dims = rng.choice(d, size=nnz, replace=False)
            proj[i, dims] = rng.standard_normal(nnz)
        self._proj = proj
        self._buf = np.empty((p.window, p.n_projections), dtype=np.float64)

    def _bins(self, z):
        raw = np.floor((z - self._mins) / self._widths)
        return np.clip(raw, 0, self.params.n_bins - 1).astype(np.int64)

    def _score(self, x):
        self._ensure(x.shape[0])
        if self._counts is None:
            return self._warm_score
        z = self._proj @ x
        out = np.empty(self.params.n_projections, dtype=np.int64)
        gather_counts(self._counts, self._bins(z), out)
        p_hat = (out + 1.0) / (self._total + self.params.n_bins)
        return float(-np.log(p_hat).mean())

    def _learn(self, x):
        self._ensure(x.shape[0])
        p = self.params
        z = self._proj @ x
        if self._counts is None:
            self._buf[self.n_seen] = z
            if self.n_seen + 1 == p.window:
                self._freeze_ranges()
            return
        bump_counts(self._counts, self._bins(z))
        self._total += 1

    def _freeze_ranges(self):
        p = self.params
        self._mins = self._buf.min(axis=0)
        widths = (self._buf.max(axis=0) - self._mins) / p.n_bins
        widths[widths <= 0] = 1.0
        self._widths = widths
        self._counts = np.zeros((p.n_projections, p.n_bins), dtype=np.int64)
        for row in self._buf:
            bump_counts(self._counts, self._bins(row))
            self._total += 1
        self._buf = None
