"""Exact Pareto geometry on known mean matrices.

All operations here are deterministic and pure: they take a (K, D) matrix of
true (or postulated) arm means and return margins, Pareto sets, gap reports,
worst-case pull-count bounds, and recommendation verdicts. Natural logs
everywhere. Comparisons are exact float comparisons; no tolerance fudging.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rules import EpsCover, EpsPsi, KRelaxed, StoppingRule

__all__ = [
    "DegenerateInstanceError",
    "GapReport",
    "margins",
    "pareto_set",
    "gaps",
    "delta_tilde",
    "sample_complexity_bound",
    "verify_recommendation",
]


class DegenerateInstanceError(ValueError):
    """Raised when a zero worst-case gap makes the pull-count bound infinite."""


def as_mean_matrix(means) -> np.ndarray:
    """Validate and return a read-only (K, D) float64 mean matrix."""
    arr = np.asarray(means, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"mean matrix must be 2-D and non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("mean matrix entries must be finite")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


def max_margin_matrix(means: np.ndarray) -> np.ndarray:
    """Matrix of M(i, j) = max_d (mu_i^d - mu_j^d); diagonal is +inf.

    The +inf diagonal makes "for all j != i" reductions plain row mins.
    """
    diff = means[:, None, :] - means[None, :, :]
    mat = diff.max(axis=2)
    np.fill_diagonal(mat, np.inf)
    return mat


def margins(means, i: int, j: int) -> tuple[float, float]:
    """(m(i,j), M(i,j)) for one ordered arm pair.

    m(i,j) is the smallest coordinate advantage of arm j over arm i, M(i,j)
    the largest advantage of i over j; the identity m = -M holds exactly.
    """
    arr = as_mean_matrix(means)
    k = arr.shape[0]
    i, j = int(i), int(j)
    if not (0 <= i < k) or not (0 <= j < k):
        raise IndexError(f"arm index out of range for K={k}: ({i}, {j})")
    if i == j:
        raise ValueError("margins are defined for distinct arms only")
    big = float(np.max(arr[i] - arr[j]))
    return -big, big


def pareto_set(means, eps: float = 0.0) -> tuple[int, ...]:
    """Arms not strictly dominated at slack eps, in increasing index order.

    Arm i is excluded only when some arm j beats mu_i + eps strictly in every
    coordinate, i.e. when M(i, j) + eps < 0. Ties (identical mean vectors)
    are therefore kept on both sides, and the result is never empty.
    """
    if eps < 0:
        raise ValueError("eps must be >= 0")
    arr = as_mean_matrix(means)
    mat = max_margin_matrix(arr)
    keep = (mat.min(axis=1) + eps) >= 0.0
    return tuple(int(a) for a in np.flatnonzero(keep))


@dataclass(frozen=True)
class GapReport:
    """Per-arm identification difficulty summary for a known instance.

    delta: the identification gap of each arm (distance to flipping its
        optimal/sub-optimal status).
    omega: omega_a = min_{j != a} M(a, j); positive exactly for Pareto arms.
    omega_sorted: omega values in non-increasing order, so omega_sorted[k-1]
        is the k-th largest.
    delta_plus / delta_minus: the two components of an optimal arm's gap,
        keyed by arm index; populated only when the Pareto set has at least
        two members (delta_minus is +inf when no arm is sub-optimal).
    pareto: the Pareto set, for convenience.
    """

    delta: np.ndarray
    omega: np.ndarray
    omega_sorted: np.ndarray
    delta_plus: dict = field(default_factory=dict)
    delta_minus: dict = field(default_factory=dict)
    pareto: tuple = ()


def gaps(means) -> GapReport:
    """Compute the full gap report; requires at least two arms."""
    arr = as_mean_matrix(means)
    K = arr.shape[0]
    if K < 2:
        raise ValueError("gap report needs K >= 2 arms")
    mat = max_margin_matrix(arr)  # M(i, j), +inf diagonal
    opt_mask = mat.min(axis=1) >= 0.0
    opt = np.flatnonzero(opt_mask)
    sub = np.flatnonzero(~opt_mask)

    delta = np.empty(K)
    # sub-optimal arm: largest min-margin against the Pareto set
    for a in sub:
        delta[a] = np.max(-mat[a, opt])

    d_plus: dict[int, float] = {}
    d_minus: dict[int, float] = {}
    if opt.size == 1:
        a = int(opt[0])
        others = [j for j in range(K) if j != a]
        delta[a] = np.min(delta[others])
    else:
        for a in opt:
            others = opt[opt != a]
            d_plus[int(a)] = float(np.min(np.minimum(mat[a, others], mat[others, a])))
            if sub.size:
                d_minus[int(a)] = float(
                    np.min(np.maximum(mat[sub, a], 0.0) + delta[sub])
                )
            else:
                d_minus[int(a)] = math.inf
            delta[a] = min(d_plus[int(a)], d_minus[int(a)])

    omega = mat.min(axis=1)
    report = GapReport(
        delta=delta,
        omega=omega,
        omega_sorted=np.sort(omega)[::-1].copy(),
        delta_plus=d_plus,
        delta_minus=d_minus,
        pareto=tuple(int(a) for a in opt),
    )
    for a in (report.delta, report.omega, report.omega_sorted):
        a.flags.writeable = False
    return report


def delta_tilde(means, a: int, eps1: float, k: int) -> float:
    """Effective gap max(delta_a, eps1, k-th largest omega) of arm a."""
    arr = as_mean_matrix(means)
    K = arr.shape[0]
    a = int(a)
    if not (0 <= a < K):
        raise IndexError(f"arm index out of range for K={K}: {a}")
    if eps1 < 0:
        raise ValueError("eps1 must be >= 0")
    if not (1 <= k <= K):
        raise ValueError(f"k must lie in [1, {K}], got {k}")
    report = gaps(arr)
    return float(max(report.delta[a], eps1, report.omega_sorted[k - 1]))


def _bound_term(dt: float, union_const: float) -> float:
    if dt <= 0:
        raise DegenerateInstanceError(
            "zero effective gap: the bound is infinite (raise eps1 or lower k)"
        )
    inner = math.log(12.0 * math.e / dt)
    if inner <= 0:
        raise ValueError("effective gap too large for the bound formula (>= 12e)")
    return (88.0 / dt**2) * math.log(union_const * inner)


def sample_complexity_bound(means, delta: float, eps1: float, k: int | None = None) -> float:
    """Sum over arms of (88 / dt_a^2) * ln((2K(K-1)D / delta) * ln(12e / dt_a)).

    dt_a is max(delta_a, eps1, omega^(k)) when k is given, max(delta_a, eps1)
    otherwise. delta is the risk level in (0, 1).
    """
    arr = as_mean_matrix(means)
    K, D = arr.shape
    if K < 2:
        raise ValueError("bound needs K >= 2 arms")
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    if eps1 < 0:
        raise ValueError("eps1 must be >= 0")
    if k is not None and not (1 <= k <= K):
        raise ValueError(f"k must lie in [1, {K}], got {k}")
    report = gaps(arr)
    omega_k = report.omega_sorted[k - 1] if k is not None else -math.inf
    union_const = 2.0 * K * (K - 1) * D / delta
    return sum(
        _bound_term(max(float(report.delta[a]), eps1, omega_k), union_const)
        for a in range(K)
    )


def _normalized_rec(rec, K: int) -> set[int]:
    out = set()
    for a in rec:
        a = int(a)
        if not (0 <= a < K):
            raise IndexError(f"recommended arm out of range for K={K}: {a}")
        out.add(a)
    return out


def verify_recommendation(means, recommendation, rule: StoppingRule) -> bool:
    """Ground-truth correctness of a recommendation under a stopping rule."""
    arr = as_mean_matrix(means)
    K = arr.shape[0]
    rec = _normalized_rec(recommendation, K)
    star = set(pareto_set(arr, 0.0))
    star_eps1 = set(pareto_set(arr, rule.eps1))
    if isinstance(rule, EpsPsi):
        return star <= rec <= star_eps1
    if isinstance(rule, EpsCover):
        if not rec <= star_eps1:
            return False
        mat = max_margin_matrix(arr)
        for i in star - rec:
            # some returned arm must beat mu_i - eps2 strictly everywhere
            if not any(-mat[i, j] + rule.eps2 > 0 for j in rec):
                return False
        return True
    if isinstance(rule, KRelaxed):
        if len(rec) == rule.k:
            return rec <= star_eps1
        return len(rec) < rule.k and star <= rec <= star_eps1
    raise TypeError(f"unknown stopping rule: {rule!r}")
