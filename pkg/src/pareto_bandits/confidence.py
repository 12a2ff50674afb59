"""Empirical running means and anytime confidence bonuses.

Two calibrations are provided. Pairwise couples an arm pair through the sum
of their inverse pull counts with an iterated-log term per arm; its union
mass K1 is 1 by default (heuristic) or K(K-1)D/2 (theoretical). PerArm bounds
each arm separately with a polynomial-in-t union, so pair bonuses add.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CalibrationError",
    "EmpiricalState",
    "Pairwise",
    "PerArm",
    "StateError",
    "arm_bonus",
    "beta",
    "mhat_margins",
    "theoretical_k1",
    "update",
]


class CalibrationError(ValueError):
    """Bonus parameters outside the formula's valid range."""


class StateError(RuntimeError):
    """Operation needs pull counts the state does not have yet."""


@dataclass
class EmpiricalState:
    """Running sums/counts per arm; means are computed on read, exactly.

    Single-writer: update() mutates in place. t is the total pull count.
    """

    sums: np.ndarray
    counts: np.ndarray
    t: int = 0

    @classmethod
    def empty(cls, K: int, D: int) -> "EmpiricalState":
        if K < 2 or D < 1:
            raise ValueError("state needs K >= 2 and D >= 1")
        return cls(sums=np.zeros((K, D)), counts=np.zeros(K, dtype=np.int64), t=0)

    @property
    def n_arms(self) -> int:
        return self.sums.shape[0]

    def mean(self, arm: int) -> np.ndarray:
        if self.counts[arm] == 0:
            raise StateError(f"arm {arm} has not been pulled")
        return self.sums[arm] / self.counts[arm]

    def means(self) -> np.ndarray:
        if np.any(self.counts == 0):
            raise StateError("all arms must be pulled at least once")
        return self.sums / self.counts[:, None]


def update(state: EmpiricalState, arm: int, obs) -> EmpiricalState:
    """Fold one observation vector into the state (exact sum/count average)."""
    obs = np.asarray(obs, dtype=np.float64)
    if obs.shape != (state.sums.shape[1],):
        raise ValueError(f"observation must have shape ({state.sums.shape[1]},)")
    state.sums[arm] += obs
    state.counts[arm] += 1
    state.t += 1
    return state


def theoretical_k1(K: int, D: int) -> float:
    """Union mass over all ordered pairs and coordinates: K(K-1)D/2."""
    return K * (K - 1) * D / 2.0


@dataclass(frozen=True)
class Pairwise:
    """Pair-coupled bonus: sigma * 2 * sqrt((Cg + sum_a ln(4+ln T_a)) * sum_a 1/T_a).

    Cg = x + ln(x) at x = ln(K1/delta)/2.
    """

    delta: float
    k1: float = 1.0
    sigma: float = 1.0

    def __post_init__(self):
        if not (0 < self.delta < 1):
            raise ValueError("delta must lie in (0, 1)")
        if self.k1 <= 0:
            raise ValueError("K1 must be > 0")
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")

    def cg_term(self) -> float:
        x = math.log(self.k1 / self.delta) / 2.0
        if x <= 0:
            raise CalibrationError("K1/delta must exceed 1")
        return x + math.log(x)


@dataclass(frozen=True)
class PerArm:
    """Per-arm bonus sigma * sqrt((2/T_i) * ln(5 K D t^4 / (2 delta))); pairs add."""

    delta: float
    sigma: float
    K: int
    D: int

    def __post_init__(self):
        if not (0 < self.delta < 1):
            raise ValueError("delta must lie in (0, 1)")
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if self.K < 2 or self.D < 1:
            raise ValueError("PerArm needs K >= 2 and D >= 1")

    def log_const(self) -> float:
        return math.log(5.0 * self.K * self.D / (2.0 * self.delta))


ConfidenceScheme = Pairwise | PerArm


def _require_pulled(state: EmpiricalState, *arms: int) -> None:
    for a in arms:
        if not (0 <= a < state.n_arms):
            raise IndexError(f"arm index out of range: {a}")
        if state.counts[a] == 0:
            raise StateError(f"arm {a} has not been pulled")


def arm_bonus(scheme: PerArm, state: EmpiricalState, arm: int) -> float:
    """Single-arm deviation bonus (PerArm calibration only)."""
    if not isinstance(scheme, PerArm):
        raise TypeError("arm_bonus is defined for the PerArm scheme")
    _require_pulled(state, arm)
    if state.t < 1:
        raise StateError("t must be >= 1")
    level = scheme.log_const() + 4.0 * math.log(state.t)
    return scheme.sigma * math.sqrt((2.0 / state.counts[arm]) * level)


def beta(scheme: ConfidenceScheme, state: EmpiricalState, i: int, j: int) -> float:
    """Pair deviation bonus beta_{i,j}(t); symmetric and strictly positive."""
    if i == j:
        raise ValueError("pair bonus needs distinct arms")
    _require_pulled(state, i, j)
    if isinstance(scheme, Pairwise):
        ti, tj = int(state.counts[i]), int(state.counts[j])
        bracket = (
            scheme.cg_term()
            + math.log(4.0 + math.log(ti))
            + math.log(4.0 + math.log(tj))
        )
        if bracket <= 0:
            raise CalibrationError("bonus undefined: K1/delta too close to 1")
        return scheme.sigma * 2.0 * math.sqrt(bracket * (1.0 / ti + 1.0 / tj))
    if isinstance(scheme, PerArm):
        return arm_bonus(scheme, state, i) + arm_bonus(scheme, state, j)
    raise TypeError(f"unknown confidence scheme: {scheme!r}")


def mhat_margins(state: EmpiricalState, i: int, j: int, bonus: float):
    """Empirical margins of the pair (i, j) with their optimistic variants.

    Returns (mhat, Mhat, mhat-, mhat+, Mhat-, Mhat+), where x- = x - bonus
    and x+ = x + bonus. The identities mhat- = -(Mhat+) and mhat+ = -(Mhat-)
    hold exactly.
    """
    if i == j:
        raise ValueError("margins are defined for distinct arms only")
    _require_pulled(state, i, j)
    diff = state.mean(i) - state.mean(j)
    big = float(np.max(diff))
    small = -big
    return (small, big, small - bonus, small + bonus, big - bonus, big + bonus)
