"""Half-space chains over a sparse random projection.

Events are projected to n_projections dims with an Achlioptas-sparse
matrix, then scored by an ensemble of chains. A chain visits a fixed
random sequence of projected dims; every revisit of a dim halves its bin
width (bin of dim j used t times is floor((z_j * 2^(t-1) + shift) /
deltamax_j)). Bin occupancy lives in small counting tables (min over two
hash rows) in two alternating banks: the previous window's bank scores
while the current one fills, swapping every `window` events. A chain's
score is min over depths of count * 2^depth; the event's score is minus
the chain mean. deltamax comes from the first window's projections
(half the range per dim); until that window completes, scores are a
constant 0.
"""

from __future__ import annotations

import numpy as np

from .._backend import jit, pick
from ..core import Detector
from ..params import XStreamParams, validate
from ._sketch import MASK64, mix64, table_seed
from ._util import child_rng

N_ROWS = 2  # hash rows per counting bank
TABLE_WIDTH = 2**15


def _chain_pass_loop(z, fs, pw, shifts, deltamax, used_dims, used_len,
                     seeds, tables, insert, out_mins):
    prime = np.uint64(0x00000100000001B3)
    width_mask = np.uint64(tables.shape[1] - 1)
    n_chains, depth = fs.shape
    cur = np.empty(z.shape[0], dtype=np.int64)
    for c in range(n_chains):
        best = np.int64(0x7FFFFFFFFFFFFFFF)
        for d in range(depth):
            j = fs[c, d]
            cur[j] = np.int64(np.floor((z[j] * pw[c, d] + shifts[c, j]) / deltamax[j]))
            cnt = np.int64(0x7FFFFFFFFFFFFFFF)
            for r in range(seeds.shape[0]):
                h = seeds[r]
                h = (h ^ np.uint64(c)) * prime
                h = (h ^ np.uint64(d)) * prime
                for e in range(used_len[c, d]):
                    h = (h ^ np.uint64(cur[used_dims[c, d, e]])) * prime
                slot = np.int64(h & width_mask)
                if insert:
                    tables[r, slot] += 1
                elif tables[r, slot] < cnt:
                    cnt = tables[r, slot]
            if not insert:
                val = cnt << (d + 1)
                if val < best:
                    best = val
        out_mins[c] = 0 if insert else best


_chain_pass_jit = jit(_chain_pass_loop)


def _chain_pass_py(z, fs, pw, shifts, deltamax, used_dims, used_len,
                   seeds, tables, insert, out_mins):
    width_mask = tables.shape[1] - 1
    n_chains, depth = fs.shape
    cur = np.empty(z.shape[0], dtype=np.int64)
    for c in range(n_chains):
        best = None
        for d in range(depth):
            j = fs[c, d]
            cur[j] = int(np.floor((z[j] * pw[c, d] + shifts[c, j]) / deltamax[j]))
            cnt = None
            for r in range(seeds.shape[0]):
                h = mix64(mix64(int(seeds[r]), c), d)
                for e in range(used_len[c, d]):
                    h = ((h ^ (int(cur[used_dims[c, d, e]]) & MASK64)) * 0x00000100000001B3) & MASK64
                slot = h & width_mask
                if insert:
                    tables[r, slot] += 1
                elif cnt is None or tables[r, slot] < cnt:
                    cnt = int(tables[r, slot])
            if not insert:
                val = cnt << (d + 1)
                if best is None or val < best:
                    best = val
        out_mins[c] = 0 if insert else best


chain_pass = pick(_chain_pass_jit, _chain_pass_py)


class XStream(Detector):
    kind = "XStream"

    def __init__(self, params: XStreamParams = None, seed: int = 0):
        super().__init__(seed)
        self.params = params or XStreamParams()
        validate(self.kind, self.params)
        p = self.params
        self._proj = None
        self._fs = None
        self._pw = None
        self._used_dims = None
        self._used_len = None
        self._shift_u = None  # uniforms, scaled by deltamax at freeze
        self._shifts = None
        self._deltamax = None
        self._buf = None
        self._count = 0
        self._seeds = np.array(
            [table_seed(seed, 7000 + r) for r in range(N_ROWS)], dtype=np.uint64
        )
        self._score_bank = np.zeros((N_ROWS, TABLE_WIDTH), dtype=np.int64)
        self._fill_bank = np.zeros((N_ROWS, TABLE_WIDTH), dtype=np.int64)

    def _ensure(self, d: int):
        if self._proj is not None:
            return
        p = self.params
        rng = child_rng(self.seed, 4)
        k = p.n_projections
        u = rng.random((k, d))
        signs = np.where(u < 1.0 / 6.0, 1.0, np.where(u < 2.0 / 6.0, -1.0, 0.0))
        self._proj = signs * np.sqrt(3.0 / k)
        self._fs = rng.integers(0, k, size=(p.n_chains, p.chain_depth)).astype(np.int64)
        # occurrence index of each dim within its chain prefix -> 2^(t-1)
        occ = np.zeros_like(self._fs)
        self._used_dims = np.zeros((p.n_chains, p.chain_depth, p.chain_depth), dtype=np.int64)
        self._used_len = np.zeros((p.n_chains, p.chain_depth), dtype=np.int64)
        for c in range(p.n_chains):
            seen: dict = {}
            order: list = []
            for dd in range(p.chain_depth):
                j = int(self._fs[c, dd])
                seen[j] = seen.get(j, 0) + 1
                occ[c, dd] = seen[j]
                if seen[j] == 1:
                    order.append(j)
                self._used_len[c, dd] = len(order)
                self._used_dims[c, dd, : len(order)] = order
        self._pw = (2.0 ** (occ - 1)).astype(np.float64)
        self._shift_u = rng.random((p.n_chains, k))
        self._buf = np.empty((p.window, k), dtype=np.float64)

    def _project(self, x):
        return self._proj @ x

    def _score(self, x):
        self._ensure(x.shape[0])
        if self._deltamax is None:
            return 0.0
        z = self._project(x)
        mins = np.empty(self.params.n_chains, dtype=np.int64)
        chain_pass(z, self._fs, self._pw, self._shifts, self._deltamax,
                   self._used_dims, self._used_len, self._seeds,
                   self._score_bank, False, mins)
        return float(-mins.mean())

    def _learn(self, x):
        self._ensure(x.shape[0])
        z = self._project(x)
        if self._deltamax is None:
            self._buf[self._count] = z
            self._count += 1
            if self._count == self.params.window:
                self._freeze()
            return
        dummy = np.empty(self.params.n_chains, dtype=np.int64)
        chain_pass(z, self._fs, self._pw, self._shifts, self._deltamax,
                   self._used_dims, self._used_len, self._seeds,
                   self._fill_bank, True, dummy)
        if (self.n_seen + 1) % self.params.window == 0:
            self._score_bank[:, :] = self._fill_bank
            self._fill_bank[:, :] = 0

    def _freeze(self):
        buf = self._buf
        delta = (buf.max(axis=0) - buf.min(axis=0)) / 2.0
        delta[delta <= 0] = 1.0
        self._deltamax = delta
        self._shifts = self._shift_u * delta[None, :]
        self._shift_u = None
        dummy = np.empty(self.params.n_chains, dtype=np.int64)
        for row in buf:
            chain_pass(row, self._fs, self._pw, self._shifts, self._deltamax,
                       self._used_dims, self._used_len, self._seeds,
                       self._score_bank, True, dummy)
        self._buf = None
        self._count = 0

    @property
    def stored_points(self):
        return self._count
