"""64-bit mixing and counting-table hashing shared by the sketch detectors.

Two implementations of the same FNV-1a style mix: the interpreted one
masks Python ints to 64 bits, the compiled one relies on uint64
wraparound. A unit test pins them to identical outputs so the sketch
kernels hash identically on either backend.
"""

from __future__ import annotations

import numpy as np

from .._backend import jit, pick

MASK64 = 0xFFFFFFFFFFFFFFFF
FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x00000100000001B3


def mix64(h: int, v: int) -> int:
    """One FNV-1a step over a 64-bit lane (interpreted path)."""
    return ((h ^ (v & MASK64)) * FNV_PRIME) & MASK64


def table_seed(base: int, table_index: int) -> int:
    return mix64(mix64(FNV_OFFSET, base), table_index + 1)


def _hash_rows_loop(cells, lengths, seeds, width_mask, out):
    # cells: (m, rmax) int64; lengths: (m,); seeds: (t,) uint64
    # out: (t, m) int64 slot indices
    prime = np.uint64(0x00000100000001B3)
    for t in range(seeds.shape[0]):
        s = seeds[t]
        for i in range(cells.shape[0]):
            h = s
            h = (h ^ np.uint64(i)) * prime
            for j in range(lengths[i]):
                h = (h ^ np.uint64(cells[i, j])) * prime
            out[t, i] = np.int64(h & np.uint64(width_mask))


_hash_rows_jit = jit(_hash_rows_loop)


def _hash_rows_py(cells, lengths, seeds, width_mask, out):
    m = cells.shape[0]
    for t in range(seeds.shape[0]):
        s = int(seeds[t])
        for i in range(m):
            h = mix64(s, i)
            row = cells[i]
            for j in range(int(lengths[i])):
                h = mix64(h, int(row[j]))
            out[t, i] = h & width_mask


hash_rows = pick(_hash_rows_jit, _hash_rows_py)


def hash_rows_with(impl, cells, lengths, seeds, width: int) -> np.ndarray:
    """Slot indices for each (table, row); width must be a power of two."""
    out = np.empty((seeds.shape[0], cells.shape[0]), dtype=np.int64)
    impl(cells, lengths, seeds.astype(np.uint64), width - 1, out)
    return out
