"""Feature pipeline: binary flags, stream-mode ordinal codes, running scalers.

The emitted vector has a fixed order:

    [processId_nonOS, parentProcessId_nonOS, userId_nonOS, returnValue_error,
     eventId, argsNum, code(processName), code(eventName)]
    + [code(parentProcessName)]   when enrichment is on

so D is 8 or 9. Raw numeric ids and mountNamespace are deliberately left
out: the ids are arbitrary labels whose semantics the flags already carry.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .core import Event, InvalidParameterError

# Thresholds behind the derived flags, kept in one auditable place.
# processId/parentProcessId 0..2 are kernel-reserved on the capture hosts;
# userId >= 1000 is the usual first regular-account uid; negative return
# values follow the errno convention.
FLAG_THRESHOLDS = {
    "processId_nonOS": ("processId", ">", 2),
    "parentProcessId_nonOS": ("parentProcessId", ">", 2),
    "userId_nonOS": ("userId", ">=", 1000),
    "returnValue_error": ("returnValue", "<", 0),
}

BASE_FEATURES = (
    "processId_nonOS",
    "parentProcessId_nonOS",
    "userId_nonOS",
    "returnValue_error",
    "eventId",
    "argsNum",
    "processName_code",
    "eventName_code",
)
ENRICHED_FEATURE = "parentProcessName_code"

# Which detectors see scaled inputs. Everyone else gets raw encoded vectors.
SCALER_FOR_KIND = {"OCSVM": "standard", "HSTree": "minmax"}


def derive_flags(e: Event) -> Event:
    """Populate the four binary flags on ``e`` (idempotent)."""
    e.processId_nonOS = 1 if e.processId > 2 else 0
    e.parentProcessId_nonOS = 1 if e.parentProcessId > 2 else 0
    e.userId_nonOS = 1 if e.userId >= 1000 else 0
    e.returnValue_error = 1 if e.returnValue < 0 else 0
    return e


def derive_flags_arrays(
    process_id: np.ndarray,
    parent_process_id: np.ndarray,
    user_id: np.ndarray,
    return_value: np.ndarray,
) -> np.ndarray:
    """Vectorized flag derivation; returns an (n, 4) float array."""
    return np.stack(
        [
            (process_id > 2).astype(np.float64),
            (parent_process_id > 2).astype(np.float64),
            (user_id >= 1000).astype(np.float64),
            (return_value < 0).astype(np.float64),
        ],
        axis=1,
    )


class OrdinalEncoder:
    """Stream-mode ordinal codes: order-of-first-appearance per column."""

    def __init__(self, columns: List[str]):
        self.columns = list(columns)
        self._maps: Dict[str, Dict[str, int]] = {c: {} for c in self.columns}

    def encode(self, column: str, value: str) -> int:
        m = self._maps[column]
        code = m.get(value)
        if code is None:
            code = len(m)
            m[value] = code
        return code

    def encode_column(self, column: str, values) -> np.ndarray:
        """Encode a whole column at once (same codes as one-at-a-time)."""
        m = self._maps[column]
        out = np.empty(len(values), dtype=np.float64)
        for i, v in enumerate(values):
            code = m.get(v)
            if code is None:
                code = len(m)
                m[v] = code
            out[i] = code
        return out

    def vocabulary(self, column: str) -> Dict[str, int]:
        return dict(self._maps[column])


class RunningScaler:
    """Online per-dimension scaler, update-then-transform.

    standard: (v - mean) / std with population std (the batch scaler's
    convention); zero std maps to 0. minmax: (v - min) / (max - min) with
    zero range mapping to 0, so outputs stay in [0, 1].
    """

    def __init__(self, mode: str, dim: int):
        if mode not in ("standard", "minmax"):
            raise InvalidParameterError("mode", f"unknown scaler mode {mode!r}")
        self.mode = mode
        self.dim = int(dim)
        self.count = 0
        if mode == "standard":
            self._mean = np.zeros(dim)
            self._m2 = np.zeros(dim)
        else:
            self._min = np.full(dim, np.inf)
            self._max = np.full(dim, -np.inf)

    def partial_fit(self, x: np.ndarray) -> None:
        self.count += 1
        if self.mode == "standard":
            delta = x - self._mean
            self._mean += delta / self.count
            self._m2 += delta * (x - self._mean)
        else:
            np.minimum(self._min, x, out=self._min)
            np.maximum(self._max, x, out=self._max)

    def transform(self, x: np.ndarray) -> np.ndarray:
        if self.count == 0:
            return np.zeros_like(x)
        if self.mode == "standard":
            var = self._m2 / self.count
            std = np.sqrt(var)
            out = np.zeros_like(x)
            nz = std > 0
            out[nz] = (x[nz] - self._mean[nz]) / std[nz]
            return out
        rng = self._max - self._min
        out = np.zeros_like(x)
        nz = rng > 0
        out[nz] = (x[nz] - self._min[nz]) / rng[nz]
        return out

    def fit_transform_one(self, x: np.ndarray) -> np.ndarray:
        self.partial_fit(x)
        return self.transform(x)

    @property
    def mean(self) -> np.ndarray:
        return self._mean.copy()

    @property
    def var(self) -> np.ndarray:
        if self.count == 0:
            return np.zeros(self.dim)
        return self._m2 / self.count


@dataclass
class PipelineConfig:
    enriched: bool = False
    sorted: bool = False
    scaler: str = "none"  # none | standard | minmax
    feature_names: List[str] = field(default_factory=list)

    def __post_init__(self):
        if self.scaler not in ("none", "standard", "minmax"):
            raise InvalidParameterError("scaler", f"unknown scaler {self.scaler!r}")
        if not self.feature_names:
            self.feature_names = list(BASE_FEATURES) + (
                [ENRICHED_FEATURE] if self.enriched else []
            )

    @property
    def dim(self) -> int:
        return len(self.feature_names)


class FeaturePipeline:
    """Event -> feature vector, holding encoder and scaler state for a run."""

    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        columns = ["processName", "eventName"]
        if cfg.enriched:
            columns.append("parentProcessName")
        self.encoder = OrdinalEncoder(columns)
        self.scaler: Optional[RunningScaler] = (
            RunningScaler(cfg.scaler, cfg.dim) if cfg.scaler != "none" else None
        )

    def transform_one(self, e: Event) -> np.ndarray:
        if e.processId_nonOS is None:
            derive_flags(e)
        vec = np.empty(self.cfg.dim, dtype=np.float64)
        vec[0] = e.processId_nonOS
        vec[1] = e.parentProcessId_nonOS
        vec[2] = e.userId_nonOS
        vec[3] = e.returnValue_error
        vec[4] = e.eventId
        vec[5] = e.argsNum
        vec[6] = self.encoder.encode("processName", e.processName)
        vec[7] = self.encoder.encode("eventName", e.eventName)
        if self.cfg.enriched:
            name = e.parentProcessName if e.parentProcessName is not None else "unknown"
            vec[8] = self.encoder.encode("parentProcessName", name)
        if self.scaler is not None:
            vec = self.scaler.fit_transform_one(vec)
        return vec

    def transform_many(self, events) -> np.ndarray:
        return np.stack([self.transform_one(e) for e in events])


def encode_split(events, enriched: bool) -> np.ndarray:
    """Unscaled feature matrix for a whole split, single encoder pass.

    Scaling stays per-detector (scaler state is part of the timed stream
    work), so this covers the shared encode-once fast path.
    """
    cfg = PipelineConfig(enriched=enriched, scaler="none")
    pipe = FeaturePipeline(cfg)
    n = len(events)
    out = np.empty((n, cfg.dim), dtype=np.float64)
    for i, e in enumerate(events):
        out[i] = pipe.transform_one(e)
    return out
