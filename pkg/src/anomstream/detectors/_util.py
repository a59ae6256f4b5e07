"""Shared helpers for detector implementations."""

from __future__ import annotations

import numpy as np


def child_rng(seed: int, *stream: int) -> np.random.Generator:
    """Independent generator for one component of a detector.

    Keyed by (seed, *stream) so ensembles get decorrelated draws that stay
    reproducible per seed. All randomness is drawn through these outside
    the hot kernels, which keeps both kernel backends on identical inputs.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, stream)]))
