"""The ten streaming detectors, one factory."""

from __future__ import annotations

from ..core import InvalidParameterError
from ..params import default_params, validate
from .hstree import HSTree
from .iforest_asd import IForestASD
from .ilof import ILOF
from .kitnet import KitNet
from .loda import LODA
from .ocsvm import OCSVM
from .rrcf import RRCF
from .rshash import RSHash
from .storm import Storm
from .xstream import XStream

REGISTRY = {
    "HSTree": HSTree,
    "IForestASD": IForestASD,
    "ILOF": ILOF,
    "KitNet": KitNet,
    "LODA": LODA,
    "OCSVM": OCSVM,
    "RRCF": RRCF,
    "RSHash": RSHash,
    "Storm": Storm,
    "XStream": XStream,
}

__all__ = ["REGISTRY", "make"] + list(REGISTRY)


def make(kind: str, params=None, seed: int = 0):
    cls = REGISTRY.get(kind)
    if cls is None:
        raise InvalidParameterError("kind", f"unknown detector kind {kind!r}")
    if params is None:
        params = default_params(kind)
    validate(kind, params)
    return cls(params, seed=seed)
