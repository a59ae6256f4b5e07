"""Exact windowed neighbor-count detector.

Score of x is minus the number of points in the last `window` events whose
Euclidean distance to x is at most `radius`. No approximation and no
randomness: scores are seed-invariant.
"""

from __future__ import annotations

import numpy as np

from .._backend import jit, pick
from ..core import Detector
from ..params import StormParams, validate


def _count_neighbors_loop(buf, m, x, r2):
    c = 0
    for i in range(m):
        s = 0.0
        for j in range(x.shape[0]):
            d = buf[i, j] - x[j]
            s += d * d
            if s > r2:
                break
        if s <= r2:
            c += 1
    return c


_count_neighbors_jit = jit(_count_neighbors_loop)


def _count_neighbors_py(buf, m, x, r2):
    if m == 0:
        return 0
    diff = buf[:m] - x
    return int(np.count_nonzero(np.einsum("ij,ij->i", diff, diff) <= r2))


count_neighbors = pick(_count_neighbors_jit, _count_neighbors_py)


class Storm(Detector):
    kind = "Storm"

    def __init__(self, params: StormParams = None, seed: int = 0):
        super().__init__(seed)
        self.params = params or StormParams()
        validate(self.kind, self.params)
        self._r2 = float(self.params.radius) ** 2
        self._buf = None
        self._m = 0  # valid rows
        self._head = 0  # next write slot

    def _ensure(self, d: int):
        if self._buf is None:
            self._buf = np.empty((self.params.window, d), dtype=np.float64)

    def _score(self, x):
        self._ensure(x.shape[0])
        return float(-count_neighbors(self._buf, self._m, x, self._r2))

    def _learn(self, x):
        self._ensure(x.shape[0])
        self._buf[self._head] = x
        self._head = (self._head + 1) % self.params.window
        if self._m < self.params.window:
            self._m += 1

    @property
    def stored_points(self):
        return self._m
