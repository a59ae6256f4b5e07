"""Incremental local outlier factor over a sliding memory.

Memory holds up to max_points vectors plus their pairwise distances,
k-distances and local reachability densities. An incoming event is scored
query-style against the current memory (its own k-distance, reachability
to its neighbors, LOF ratio) before insertion. Insertion and FIFO
eviction update only the affected points: those whose neighborhood gains
or loses the moved point, then — where a k-distance actually changed —
their reverse neighbors' densities. Neighborhoods include all ties at the
k-distance. Zero mean reachability (duplicate clusters) is guarded to a
huge finite density, which cancels in the LOF ratio and yields 1.0.

Deterministic and seed-free; scores depend only on the stream.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from ..core import Detector
from ..params import ILOFParams, validate

EPS = 1e-12


class ILOF(Detector):
    kind = "ILOF"

    def __init__(self, params: ILOFParams = None, seed: int = 0):
        super().__init__(seed)
        self.params = params or ILOFParams()
        validate(self.kind, self.params)
        if self.params.max_points <= self.params.k_neighbors:
            from ..core import InvalidParameterError

            raise InvalidParameterError(
                "max_points", "must exceed k_neighbors for LOF to be defined"
            )
        self._x = None
        self._dist = None
        self._kdist = None
        self._lrd = None
        self._active = None
        self._order = deque()
        self._free = None

    def _ensure(self, d: int):
        if self._x is not None:
            return
        cap = self.params.max_points
        self._x = np.empty((cap, d), dtype=np.float64)
        self._dist = np.full((cap, cap), np.inf)
        self._kdist = np.full(cap, np.inf)
        self._lrd = np.full(cap, 1.0 / EPS)
        self._active = np.zeros(cap, dtype=bool)
        self._free = list(range(cap - 1, -1, -1))

    # -- core quantities ----------------------------------------------

    def _kth(self, row: np.ndarray) -> float:
        """k-distance from a full distance row (inf at self/inactive)."""
        n_others = int(self._active.sum()) - 1
        kk = min(self.params.k_neighbors, n_others)
        if kk < 1:
            return np.inf
        return float(np.partition(row, kk - 1)[kk - 1])

    def _kth_query(self, dv: np.ndarray) -> float:
        kk = min(self.params.k_neighbors, dv.shape[0])
        return float(np.partition(dv, kk - 1)[kk - 1])

    def _refresh_lrd(self, slot: int) -> None:
        row = self._dist[slot]
        mask = self._active & (row <= self._kdist[slot])
        mask[slot] = False
        if not mask.any():
            self._lrd[slot] = 1.0 / EPS
            return
        reach = np.maximum(row[mask], self._kdist[mask])
        self._lrd[slot] = 1.0 / max(float(reach.mean()), EPS)

    def _refresh_all(self) -> None:
        for s in np.flatnonzero(self._active):
            self._kdist[s] = self._kth(self._dist[s])
        for s in np.flatnonzero(self._active):
            self._refresh_lrd(s)

    # -- contract ------------------------------------------------------

    def _score(self, x):
        self._ensure(x.shape[0])
        act = np.flatnonzero(self._active)
        if act.shape[0] < self.params.k_neighbors + 1:
            return 1.0
        dv = np.sqrt(((self._x[act] - x) ** 2).sum(axis=1))
        kd = self._kth_query(dv)
        nb = act[dv <= kd]
        reach = np.maximum(dv[dv <= kd], self._kdist[nb])
        lrd_x = 1.0 / max(float(reach.mean()), EPS)
        return float(self._lrd[nb].mean() / lrd_x)

    def _learn(self, x):
        self._ensure(x.shape[0])
        if len(self._order) >= self.params.max_points:
            self._evict(self._order.popleft())
        self._insert(x)

    def _insert(self, x):
        slot = self._free.pop()
        self._order.append(slot)
        act = np.flatnonzero(self._active)
        self._x[slot] = x
        dv = np.sqrt(((self._x[act] - x) ** 2).sum(axis=1)) if act.size else np.empty(0)
        self._dist[slot, :] = np.inf
        self._dist[slot, act] = dv
        self._dist[act, slot] = dv
        self._active[slot] = True
        n = act.shape[0] + 1
        if n <= self.params.k_neighbors + 2:
            self._refresh_all()
            return
        self._kdist[slot] = self._kth(self._dist[slot])
        # points that now count the new point among their neighbors
        gained = act[dv <= self._kdist[act]]
        old = self._kdist[gained]
        for o in gained:
            self._kdist[o] = self._kth(self._dist[o])
        changed = gained[self._kdist[gained] < old]
        self._refresh_affected(slot, gained, changed)

    def _evict(self, slot: int):
        act = np.flatnonzero(self._active)
        others = act[act != slot]
        col = self._dist[others, slot]
        lost = others[col <= self._kdist[others]]
        self._active[slot] = False
        self._free.append(slot)
        self._dist[slot, :] = np.inf
        self._dist[:, slot] = np.inf
        self._kdist[slot] = np.inf
        self._lrd[slot] = 1.0 / EPS
        if others.shape[0] <= self.params.k_neighbors + 1:
            self._refresh_all()
            return
        old = self._kdist[lost]
        for o in lost:
            self._kdist[o] = self._kth(self._dist[o])
        changed = lost[self._kdist[lost] > old]
        self._refresh_affected(None, lost, changed)

    def _refresh_affected(self, slot, direct, changed):
        """Recompute lrd for direct set, the slot, and reverse neighbors
        of points whose k-distance moved."""
        todo = set(int(s) for s in direct)
        if slot is not None:
            todo.add(int(slot))
        if changed.size:
            act = np.flatnonzero(self._active)
            sub = self._dist[np.ix_(act, changed)]
            hit = act[(sub <= self._kdist[act][:, None]).any(axis=1)]
            todo.update(int(s) for s in hit)
        for s in sorted(todo):
            if self._active[s]:
                self._refresh_lrd(s)

    @property
    def stored_points(self):
        return len(self._order)
