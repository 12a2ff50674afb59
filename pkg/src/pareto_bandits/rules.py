"""Stopping/recommendation rule descriptors shared across modules."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union


@dataclass(frozen=True)
class EpsPsi:
    """Identify the full Pareto set, allowing eps1-slack false positives."""

    eps1: float = 0.0

    def __post_init__(self):
        if self.eps1 < 0:
            raise ValueError("eps1 must be >= 0")


@dataclass(frozen=True)
class EpsCover:
    """Return an eps2-cover of the Pareto set built from eps1-optimal arms."""

    eps1: float = 0.0
    eps2: float = 0.0

    def __post_init__(self):
        if self.eps1 < 0:
            raise ValueError("eps1 must be >= 0")
        if self.eps2 < 0:
            raise ValueError("eps2 must be >= 0")


@dataclass(frozen=True)
class KRelaxed:
    """Stop early once k eps1-optimal arms are certified (full set if fewer)."""

    eps1: float = 0.0
    k: int = 1

    def __post_init__(self):
        if self.eps1 < 0:
            raise ValueError("eps1 must be >= 0")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("k must be a positive integer")


StoppingRule = Union[EpsPsi, EpsCover, KRelaxed]
