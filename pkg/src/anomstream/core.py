"""Domain types and the prequential detector contract.

Every detector follows score-then-learn: ``process_one(x)`` returns the
anomaly score of ``x`` computed *before* the model absorbs it. Scores are
finite reals where higher means more anomalous; only their ranking matters
downstream. Labels never reach a detector.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class AnomstreamError(Exception):
    """Base class for library errors."""


class InvalidParameterError(AnomstreamError):
    """A detector or pipeline parameter is out of its valid range."""

    def __init__(self, param: str, reason: str):
        self.param = param
        self.reason = reason
        super().__init__(f"invalid parameter {param!r}: {reason}")


class DimensionMismatchError(AnomstreamError):
    """Feature vector length differs from the stream's established length."""


class NonFiniteInputError(AnomstreamError):
    """Feature vector contains NaN or infinity."""


class DegenerateLabelsError(AnomstreamError):
    """Metric requested on labels with only one class present."""


class IngestError(AnomstreamError):
    """Base class for dataset loading errors."""


class MissingColumnError(IngestError):
    def __init__(self, column: str, path: str):
        self.column = column
        super().__init__(f"{path}: required column {column!r} not found in header")


class MalformedRowError(IngestError):
    def __init__(self, row_index: int, path: str, detail: str):
        self.row_index = row_index
        super().__init__(f"{path}: row {row_index}: {detail}")


class EmptyFileError(IngestError):
    def __init__(self, path: str):
        super().__init__(f"{path}: no data rows")


@dataclass
class Event:
    """One process-telemetry record plus derived flags.

    Field names mirror the dataset's column headers. ``sus`` and ``evil``
    are evaluation-only labels; detectors never see them.
    """

    timestamp: float
    processId: int
    threadId: int
    parentProcessId: int
    userId: int
    mountNamespace: int
    processName: str
    hostName: str
    eventId: int
    eventName: str
    argsNum: int
    returnValue: int
    sus: int = 0
    evil: int = 0
    parentProcessName: Optional[str] = None
    processId_nonOS: Optional[int] = None
    parentProcessId_nonOS: Optional[int] = None
    userId_nonOS: Optional[int] = None
    returnValue_error: Optional[int] = None


class Detector:
    """Base class for streaming detectors.

    Subclasses implement ``_score`` (pure: must not mutate state) and
    ``_learn``. The public ``process_one`` enforces the input contract and
    the prequential ordering. State is single-writer: one stream mutates
    one instance sequentially.
    """

    kind: str = "?"

    def __init__(self, seed: int = 0):
        self.seed = int(seed)
        self.n_seen = 0
        self._dim: Optional[int] = None

    # -- contract -----------------------------------------------------

    def _score(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def _learn(self, x: np.ndarray) -> None:
        raise NotImplementedError

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1:
            raise DimensionMismatchError(f"expected 1-d vector, got shape {x.shape}")
        if self._dim is None:
            self._dim = x.shape[0]
        elif x.shape[0] != self._dim:
            raise DimensionMismatchError(
                f"vector length {x.shape[0]} != stream length {self._dim}"
            )
        if not np.isfinite(x).all():
            raise NonFiniteInputError(f"non-finite entries in {x!r}")
        return x

    def score_one(self, x) -> float:
        """Score ``x`` against the current state without learning it."""
        return float(self._score(self._check(x)))

    def learn_one(self, x) -> None:
        """Absorb ``x`` into the state."""
        self._learn(self._check(x))
        self.n_seen += 1

    def process_one(self, x) -> float:
        """Score ``x``, then learn it (prequential order). Returns the score."""
        x = self._check(x)
        s = float(self._score(x))
        self._learn(x)
        self.n_seen += 1
        return s

    # -- introspection ------------------------------------------------

    @property
    def stored_points(self) -> int:
        """Number of raw stream vectors currently retained (memory bound)."""
        return 0

    def clone(self) -> "Detector":
        """Deep copy of the full state; used by score-purity checks."""
        return copy.deepcopy(self)


@dataclass
class RunResult:
    """Outcome of one (config, seed) prequential replay."""

    detector: str
    sorted: bool
    enriched: bool
    seed: int
    scores: np.ndarray
    total_time_seconds: float
    roc_auc_evil: float
    roc_auc_sus: float
    n_train: int
    n_test: int


@dataclass
class Report:
    """Aggregated grid results: one row per (model, sorted, enriched)."""

    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)
