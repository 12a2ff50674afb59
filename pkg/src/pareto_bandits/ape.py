"""Adaptive Pareto exploration: sampling rule, stopping tests, run engine.

Round structure (after pulling every arm once): evaluate the stopping rule on
the current state first (the k-count test before the Z-test), then, only if
the run continues, pick the challenged arm b (most ambiguous candidate
outside the confident-optimal set), its closest challenger c, and pull the
least-pulled of the two. All argmax/argmin ties resolve to the lowest index.

Two engines produce identical trajectories: a readable reference loop built
on the public operations below, and a jitted kernel for long runs. Both
consume the same per-(seed, arm) observation streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bandit_model import BanditInstance, BernoulliIndependent, GaussianDiagonal, RngStream
from .confidence import EmpiricalState, Pairwise, PerArm, update
from .rules import EpsCover, EpsPsi, KRelaxed, StoppingRule

__all__ = [
    "ContractViolationError",
    "RunResult",
    "TRIGGER_CAP",
    "TRIGGER_K",
    "TRIGGER_Z",
    "check_stop",
    "empirical_pareto",
    "opt_set",
    "run",
    "select",
    "stopping_stats",
]

TRIGGER_Z = "z-test"
TRIGGER_K = "k-count"
TRIGGER_CAP = "round-cap"


class ContractViolationError(RuntimeError):
    """select() was called on a state the stop-first loop can never produce."""


@dataclass(frozen=True)
class RunResult:
    """Outcome of one identification run.

    tau counts every pull including the K initialisation pulls; pulls sums to
    tau. recommendation is empty only when the round cap fired before any
    candidate emerged (and capped runs are never counted as successes).
    """

    tau: int
    recommendation: tuple
    trigger: str
    pulls: np.ndarray
    config: dict
    seed: int

    @property
    def capped(self) -> bool:
        return self.trigger == TRIGGER_CAP


# ---------------------------------------------------------------------------
# per-round index computations (reference path)
# ---------------------------------------------------------------------------

def _margin_matrix(state: EmpiricalState) -> np.ndarray:
    mu = state.means()
    mat = (mu[:, None, :] - mu[None, :, :]).max(axis=2)
    np.fill_diagonal(mat, np.inf)
    return mat


def _bonus_matrix(state: EmpiricalState, scheme) -> np.ndarray:
    counts = state.counts.astype(np.float64)
    if isinstance(scheme, Pairwise):
        lg = np.log(4.0 + np.log(counts))
        bracket = scheme.cg_term() + lg[:, None] + lg[None, :]
        inv = 1.0 / counts
        return scheme.sigma * 2.0 * np.sqrt(bracket * (inv[:, None] + inv[None, :]))
    if isinstance(scheme, PerArm):
        level = scheme.log_const() + 4.0 * math.log(state.t)
        bvec = scheme.sigma * np.sqrt((2.0 / counts) * level)
        return bvec[:, None] + bvec[None, :]
    raise TypeError(f"unknown confidence scheme: {scheme!r}")


def empirical_pareto(state: EmpiricalState) -> tuple:
    """Arms not strictly dominated by any empirical mean (ties kept)."""
    mat = _margin_matrix(state)
    return tuple(int(a) for a in np.flatnonzero(mat.min(axis=1) >= 0.0))


def _h_vector(mat, bon, eps1):
    return (mat - bon).min(axis=1) + eps1


def opt_set(state: EmpiricalState, scheme, eps1: float) -> tuple:
    """Arms whose pessimistic margins certify eps1-optimality."""
    mat = _margin_matrix(state)
    h = _h_vector(mat, _bonus_matrix(state, scheme), eps1)
    return tuple(int(a) for a in np.flatnonzero(h > 0.0))


def select(state: EmpiricalState, scheme, eps1: float) -> tuple:
    """(b, c, arm_to_pull). Requires some arm outside the confident set."""
    mat = _margin_matrix(state)
    bon = _bonus_matrix(state, scheme)
    h = _h_vector(mat, bon, eps1)
    ambiguous = h <= 0.0
    if not ambiguous.any():
        raise ContractViolationError(
            "every arm is already confidently optimal; the stop test must run first"
        )
    scores = (mat + bon).min(axis=1)
    scores[~ambiguous] = -np.inf
    b = int(np.argmax(scores))
    low = mat[b] - bon[b]
    low[b] = np.inf
    c = int(np.argmin(low))
    if state.counts[b] < state.counts[c]:
        a = b
    elif state.counts[c] < state.counts[b]:
        a = c
    else:
        a = min(b, c)
    return b, c, a


def _stop_internals(state: EmpiricalState, scheme, rule: StoppingRule):
    mat = _margin_matrix(state)
    bon = _bonus_matrix(state, scheme)
    h = _h_vector(mat, bon, rule.eps1)
    opt = h > 0.0
    g_plain = (-mat - bon).max(axis=1)
    if isinstance(rule, EpsCover):
        g_rule = (-mat - bon + rule.eps2 * opt[None, :]).max(axis=1)
        score = np.maximum(g_rule, h)
        z_of = score
    else:
        z_of = None
    s_mask = mat.min(axis=1) >= 0.0
    if isinstance(rule, EpsCover):
        z1 = z_of[s_mask].min() if s_mask.any() else np.inf
        z2 = z_of[~s_mask].min() if (~s_mask).any() else np.inf
    else:
        z1 = h[s_mask].min() if s_mask.any() else np.inf
        z2 = np.maximum(g_plain, h)[~s_mask].min() if (~s_mask).any() else np.inf
    return mat, bon, h, opt, g_plain, s_mask, float(z1), float(z2)


def stopping_stats(state: EmpiricalState, scheme, rule: StoppingRule) -> tuple:
    """(Z1, Z2) for the rule; min over an empty side is +inf."""
    *_, z1, z2 = _stop_internals(state, scheme, rule)
    return z1, z2


def _eps_psi_recommendation(s_mask, g_plain) -> tuple:
    rec = s_mask | (~s_mask & (g_plain <= 0.0))
    return tuple(int(a) for a in np.flatnonzero(rec))


def _lowest_k(mask: np.ndarray, k: int) -> tuple:
    return tuple(int(a) for a in np.flatnonzero(mask)[:k])


def check_stop(state: EmpiricalState, scheme, rule: StoppingRule):
    """(recommendation, trigger) if the rule fires on this state, else None.

    The k-count test precedes the Z-test when both would fire.
    """
    _, _, h, opt, g_plain, s_mask, z1, z2 = _stop_internals(state, scheme, rule)
    if isinstance(rule, KRelaxed) and int(opt.sum()) >= rule.k:
        return _lowest_k(opt, rule.k), TRIGGER_K
    if z1 > 0.0 and z2 > 0.0:
        if isinstance(rule, EpsCover):
            return tuple(int(a) for a in np.flatnonzero(opt)), TRIGGER_Z
        return _eps_psi_recommendation(s_mask, g_plain), TRIGGER_Z
    return None


# ---------------------------------------------------------------------------
# run engines
# ---------------------------------------------------------------------------

class ObservationCursor:
    """Sequential reader over the per-arm observation streams, block-buffered."""

    def __init__(self, instance: BanditInstance, rng: RngStream, initial: int = 64):
        self._instance = instance
        self._rng = rng
        self.blocks = [
            rng.draw_block(instance, a, initial) for a in range(instance.n_arms)
        ]
        self._used = [0] * instance.n_arms

    def grow(self, arm: int) -> None:
        more = self._rng.draw_block(self._instance, arm, len(self.blocks[arm]))
        self.blocks[arm] = np.concatenate([self.blocks[arm], more])

    def next(self, arm: int) -> np.ndarray:
        if self._used[arm] == len(self.blocks[arm]):
            self.grow(arm)
        row = self.blocks[arm][self._used[arm]]
        self._used[arm] += 1
        return row


def scheme_dict(scheme) -> dict:
    if isinstance(scheme, Pairwise):
        return {"kind": "pairwise", "delta": scheme.delta, "k1": scheme.k1, "sigma": scheme.sigma}
    if isinstance(scheme, PerArm):
        return {"kind": "per-arm", "delta": scheme.delta, "sigma": scheme.sigma,
                "K": scheme.K, "D": scheme.D}
    return {"kind": type(scheme).__name__}


def rule_dict(rule: StoppingRule) -> dict:
    if isinstance(rule, EpsPsi):
        return {"kind": "eps-psi", "eps1": rule.eps1}
    if isinstance(rule, EpsCover):
        return {"kind": "eps-cover", "eps1": rule.eps1, "eps2": rule.eps2}
    return {"kind": "k-relaxed", "eps1": rule.eps1, "k": rule.k}


def instance_dict(instance: BanditInstance) -> dict:
    return {
        "digest": instance.digest(),
        "K": instance.n_arms,
        "D": instance.n_objectives,
        "family": "gaussian" if isinstance(instance.family, GaussianDiagonal) else "bernoulli",
    }


def _config_echo(algo, instance, scheme, rule, round_cap) -> dict:
    cfg = {
        "algo": algo,
        "instance": instance_dict(instance),
        "scheme": scheme_dict(scheme),
        "round_cap": round_cap,
    }
    if rule is not None:
        cfg["rule"] = rule_dict(rule)
    return cfg


def _coerce_rng(rng) -> RngStream:
    return rng if isinstance(rng, RngStream) else RngStream(rng)


def _validate_run_args(instance, scheme, rule, round_cap):
    K = instance.n_arms
    if round_cap < K:
        raise ValueError("round_cap must be at least K (the initialisation pulls)")
    if isinstance(rule, KRelaxed) and rule.k > K:
        raise ValueError(f"k must lie in [1, {K}]")
    if isinstance(scheme, PerArm) and (scheme.K != K or scheme.D != instance.n_objectives):
        raise ValueError("PerArm scheme dimensions must match the instance")


def run(
    instance: BanditInstance,
    scheme,
    rule: StoppingRule,
    rng,
    round_cap: int = 10**8,
    engine: str = "fast",
) -> RunResult:
    """Run one identification episode and return its RunResult.

    rng is a RngStream or a bare seed. engine="fast" uses the jitted kernel;
    engine="reference" runs the readable loop. Both give the same trajectory
    for the same seed.
    """
    _validate_run_args(instance, scheme, rule, round_cap)
    rng = _coerce_rng(rng)
    config = _config_echo("ape", instance, scheme, rule, round_cap)
    if engine == "fast":
        from . import _kernels

        return _kernels.run_ape_fast(instance, scheme, rule, rng, round_cap, config)
    if engine != "reference":
        raise ValueError(f"unknown engine: {engine!r}")

    K = instance.n_arms
    cursor = ObservationCursor(instance, rng)
    state = EmpiricalState.empty(K, instance.n_objectives)
    for a in range(K):
        update(state, a, cursor.next(a))

    while True:
        stopped = check_stop(state, scheme, rule)
        if stopped is not None:
            rec, trigger = stopped
            break
        if state.t >= round_cap:
            _, _, _, _, g_plain, s_mask, _, _ = _stop_internals(state, scheme, rule)
            rec, trigger = _eps_psi_recommendation(s_mask, g_plain), TRIGGER_CAP
            break
        _, _, a = select(state, scheme, rule.eps1)
        update(state, a, cursor.next(a))

    return RunResult(
        tau=state.t,
        recommendation=rec,
        trigger=trigger,
        pulls=state.counts.copy(),
        config=config,
        seed=rng.seed,
    )
