"""Streaming anomaly detection over OS process-event streams.

Ten online detectors behind one score-then-learn contract, a feature
pipeline for kernel-telemetry CSVs, and a prequential benchmark harness
(per-event timing, post-hoc ROC-AUC, seed aggregation).
"""

from ._backend import BACKEND
from .core import (
    AnomstreamError,
    DegenerateLabelsError,
    Detector,
    DimensionMismatchError,
    Event,
    InvalidParameterError,
    NonFiniteInputError,
)
from .params import KINDS, default_params, load_params_file, save_params_file

__version__ = "0.1.0"

__all__ = [
    "AnomstreamError",
    "BACKEND",
    "DegenerateLabelsError",
    "Detector",
    "DimensionMismatchError",
    "Event",
    "InvalidParameterError",
    "KINDS",
    "NonFiniteInputError",
    "default_params",
    "load_params_file",
    "save_params_file",
    "make_detector",
]


def make_detector(kind: str, params=None, seed: int = 0):
    """Instantiate a detector by kind name with validated parameters."""
    from . import detectors

    return detectors.make(kind, params=params, seed=seed)
