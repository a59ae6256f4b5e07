"""Detector hyperparameter ledger.

One frozen dataclass per detector kind, a registry mapping kind names to
them, range validation with named-field errors, and load/save against an
INI file so a run's hyperparameters ship alongside its results. The
packaged ``defaults.ini`` mirrors the dataclass defaults exactly; a test
keeps them in sync.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass
from typing import Optional

from .core import InvalidParameterError

KINDS = (
    "HSTree",
    "IForestASD",
    "ILOF",
    "KitNet",
    "LODA",
    "OCSVM",
    "RRCF",
    "RSHash",
    "Storm",
    "XStream",
)


@dataclass(frozen=True)
class HSTreeParams:
    n_trees: int = 25
    depth: int = 15
    window: int = 250


@dataclass(frozen=True)
class IForestASDParams:
    window: int = 1024
    n_trees: int = 100
    subsample: int = 256


@dataclass(frozen=True)
class ILOFParams:
    k_neighbors: int = 10
    max_points: int = 2000


@dataclass(frozen=True)
class KitNetParams:
    max_autoencoder_size: int = 10
    grace_feature_map: int = 5000
    grace_training: int = 10000
    learning_rate: float = 0.1
    hidden_ratio: float = 0.75


@dataclass(frozen=True)
class LODAParams:
    n_projections: int = 100
    n_bins: int = 100
    # Non-zero entries per projection; None means ceil(sqrt(D)) once the
    # stream's dimensionality is known.
    sparsity: Optional[int] = None
    window: int = 256


@dataclass(frozen=True)
class OCSVMParams:
    nu: float = 0.1
    learning_rate: float = 0.01


@dataclass(frozen=True)
class RRCFParams:
    n_trees: int = 40
    tree_capacity: int = 256


@dataclass(frozen=True)
class RSHashParams:
    n_components: int = 100
    sample_size: int = 1000
    n_hash_tables: int = 4
    table_width: int = 2**15


@dataclass(frozen=True)
class StormParams:
    window: int = 1000
    radius: float = 0.1


@dataclass(frozen=True)
class XStreamParams:
    n_projections: int = 50
    n_chains: int = 50
    chain_depth: int = 10
    window: int = 512


PARAM_TYPES = {
    "HSTree": HSTreeParams,
    "IForestASD": IForestASDParams,
    "ILOF": ILOFParams,
    "KitNet": KitNetParams,
    "LODA": LODAParams,
    "OCSVM": OCSVMParams,
    "RRCF": RRCFParams,
    "RSHash": RSHashParams,
    "Storm": StormParams,
    "XStream": XStreamParams,
}

# Fields that must be strictly positive integers.
_COUNT_FIELDS = {
    "n_trees",
    "depth",
    "subsample",
    "k_neighbors",
    "max_points",
    "max_autoencoder_size",
    "grace_feature_map",
    "grace_training",
    "n_projections",
    "n_bins",
    "n_chains",
    "chain_depth",
    "n_components",
    "sample_size",
    "n_hash_tables",
    "table_width",
    "tree_capacity",
}
# Window-like fields need at least two events to be meaningful.
_WINDOW_FIELDS = {"window"}


def default_params(kind: str):
    if kind not in PARAM_TYPES:
        raise InvalidParameterError("kind", f"unknown detector kind {kind!r}")
    return PARAM_TYPES[kind]()


def validate(kind: str, params) -> None:
    """Raise InvalidParameterError naming the first out-of-range field."""
    expected = PARAM_TYPES.get(kind)
    if expected is None:
        raise InvalidParameterError("kind", f"unknown detector kind {kind!r}")
    if not isinstance(params, expected):
        raise InvalidParameterError(
            "params", f"expected {expected.__name__}, got {type(params).__name__}"
        )
    for f in dataclasses.fields(params):
        v = getattr(params, f.name)
        if f.name in _COUNT_FIELDS:
            if v is None and f.name == "sparsity":
                continue
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise InvalidParameterError(f.name, f"must be an integer >= 1, got {v!r}")
        elif f.name in _WINDOW_FIELDS:
            if not isinstance(v, int) or isinstance(v, bool) or v < 2:
                raise InvalidParameterError(f.name, f"must be an integer >= 2, got {v!r}")
        elif f.name == "sparsity":
            if v is not None and (not isinstance(v, int) or v < 1):
                raise InvalidParameterError("sparsity", f"must be None or >= 1, got {v!r}")
        elif f.name == "nu":
            if not 0.0 < v <= 1.0:
                raise InvalidParameterError("nu", f"must satisfy 0 < nu <= 1, got {v!r}")
        elif f.name == "hidden_ratio":
            if not 0.0 < v < 1.0:
                raise InvalidParameterError(
                    "hidden_ratio", f"must satisfy 0 < hidden_ratio < 1, got {v!r}"
                )
        elif f.name in ("learning_rate", "radius"):
            if not v > 0:
                raise InvalidParameterError(f.name, f"must be > 0, got {v!r}")


def _coerce(field: dataclasses.Field, raw: str):
    raw = raw.strip()
    if field.name == "sparsity" and raw.lower() in ("", "none", "auto"):
        return None
    if field.type in ("int", "Optional[int]"):
        return int(raw)
    if field.type == "float":
        return float(raw)
    return raw


def load_params_file(path: str) -> dict:
    """Read an INI hyperparameter file into {kind: params dataclass}.

    Sections are detector kinds; keys are dataclass field names. Kinds not
    present keep their defaults. Unknown sections or keys are errors so
    typos fail loudly.
    """
    cp = configparser.ConfigParser()
    with open(path) as fh:
        cp.read_file(fh)
    out = {k: PARAM_TYPES[k]() for k in KINDS}
    for section in cp.sections():
        if section not in PARAM_TYPES:
            raise InvalidParameterError(section, "unknown detector kind in params file")
        cls = PARAM_TYPES[section]
        by_name = {f.name: f for f in dataclasses.fields(cls)}
        overrides = {}
        for key, raw in cp.items(section):
            if key not in by_name:
                raise InvalidParameterError(
                    f"{section}.{key}", "unknown hyperparameter in params file"
                )
            try:
                overrides[key] = _coerce(by_name[key], raw)
            except ValueError as exc:
                raise InvalidParameterError(f"{section}.{key}", str(exc)) from exc
        out[section] = dataclasses.replace(out[section], **overrides)
        validate(section, out[section])
    return out


def save_params_file(path: str, params_by_kind: Optional[dict] = None) -> None:
    """Write all kinds' parameters (defaults where not given) as INI."""
    params_by_kind = params_by_kind or {}
    cp = configparser.ConfigParser()
    for kind in KINDS:
        p = params_by_kind.get(kind, PARAM_TYPES[kind]())
        cp[kind] = {
            f.name: ("" if getattr(p, f.name) is None else str(getattr(p, f.name)))
            for f in dataclasses.fields(p)
        }
    with open(path, "w") as fh:
        cp.write(fh)
