"""Comparison algorithms: phased uniform elimination for Pareto set
identification, and single-objective best-arm baselines.

The elimination algorithm proceeds in phases. Each phase pulls every active
arm once, then three filters run on the active set: arms beaten by some
active arm beyond the confidence bonus are discarded; arms whose pessimistic
margin against every surviving arm clears the eps1 slack become acceptance
candidates; candidates that no undecided arm still challenges are accepted
and leave the active set. The run ends when the active set empties (output:
all accepted arms) or, with k < K, as soon as accepted plus candidates reach
k arms (output: the k lowest-indexed of them).

Best-arm baselines (D = 1, per-arm bonuses): "lucb" pulls both the empirical
leader and its strongest rival each round and stops when their intervals
separate; "ugapec" pulls the least-sampled of the most ambiguous arm and its
rival; "lucbpp" is lucb with the leader / rival bonus sides calibrated
separately (no arm union on the leader side). Custom bonus schemes may be
supplied as objects with a .sigma attribute and an .arm_bonus(state, arm)
method; those always run on the reference engine.
"""

from __future__ import annotations

from dataclasses import dataclass

import math

import numpy as np

from .ape import (
    TRIGGER_CAP,
    TRIGGER_K,
    TRIGGER_Z,
    ObservationCursor,
    RunResult,
    _bonus_matrix,
    _coerce_rng,
    _config_echo,
    _margin_matrix,
)
from .bandit_model import BanditInstance
from .confidence import EmpiricalState, PerArm, arm_bonus, update
from .rules import KRelaxed

__all__ = ["BAI_ALGORITHMS", "EliminationState", "bai_run", "psi_unif_elim"]

BAI_ALGORITHMS = ("lucb", "ugapec", "lucbpp")


@dataclass(frozen=True)
class EliminationState:
    """Per-phase snapshot passed to phase_hook (reference engine only).

    accepted and active are always disjoint, and active only ever shrinks
    from one phase to the next.
    """

    phase: int
    t: int
    active: tuple
    accepted: tuple
    candidates: tuple
    newly_accepted: tuple


def psi_unif_elim(
    instance: BanditInstance,
    scheme,
    eps1: float = 0.0,
    k: int | None = None,
    rng=None,
    round_cap: int = 10**8,
    engine: str = "fast",
    phase_hook=None,
) -> RunResult:
    """Run phased uniform elimination; k=None means k=K (no early stop)."""
    K = instance.n_arms
    if k is None:
        k = K
    if not (isinstance(k, int) and 1 <= k <= K):
        raise ValueError(f"k must be an integer in [1, {K}]")
    if eps1 < 0.0:
        raise ValueError("eps1 must be nonnegative")
    if round_cap < K:
        raise ValueError("round_cap must be at least K (one full phase)")
    if isinstance(scheme, PerArm) and (scheme.K != K or scheme.D != instance.n_objectives):
        raise ValueError("PerArm scheme dimensions must match the instance")
    if rng is None:
        raise TypeError("rng is required (an RngStream or a bare seed)")
    rng = _coerce_rng(rng)
    config = _config_echo("psi-unif-elim", instance, scheme, KRelaxed(eps1, k), round_cap)

    if engine == "fast":
        if phase_hook is not None:
            raise ValueError("phase_hook requires engine='reference'")
        from . import _kernels

        return _kernels.run_elim_fast(instance, scheme, eps1, k, rng, round_cap, config)
    if engine != "reference":
        raise ValueError(f"unknown engine: {engine!r}")

    cursor = ObservationCursor(instance, rng)
    state = EmpiricalState.empty(K, instance.n_objectives)
    active = list(range(K))
    accepted: list = []
    phase = 0
    while True:
        if state.t + len(active) > round_cap:
            mat = _margin_matrix(state)
            nondom = {
                i for i in active
                if all(mat[i, j] >= 0.0 for j in active if j != i)
            }
            rec, trigger = tuple(sorted(set(accepted) | nondom)), TRIGGER_CAP
            break
        for a in active:
            update(state, a, cursor.next(a))
        phase += 1
        mat = _margin_matrix(state)
        bon = _bonus_matrix(state, scheme)
        a1 = [
            i for i in active
            if all(-mat[i, j] <= bon[i, j] for j in active if j != i)
        ]
        a1_set = set(a1)
        p1 = [
            i for i in a1
            if all(mat[i, j] + eps1 >= bon[i, j] for j in a1 if j != i)
        ]
        p1_set = set(p1)
        p2 = [
            j for j in p1
            if not any(mat[i, j] + eps1 <= bon[i, j] for i in a1 if i not in p1_set)
        ]
        kcand = sorted(set(accepted) | p1_set)
        accepted = sorted(set(accepted) | set(p2))
        active = [i for i in a1 if i not in set(p2)]
        if phase_hook is not None:
            phase_hook(EliminationState(
                phase=phase,
                t=state.t,
                active=tuple(active),
                accepted=tuple(accepted),
                candidates=tuple(p1),
                newly_accepted=tuple(p2),
            ))
        if not active:
            rec, trigger = tuple(accepted), TRIGGER_Z
            break
        if len(kcand) >= k:
            rec, trigger = tuple(kcand[:k]), TRIGGER_K
            break

    return RunResult(
        tau=state.t,
        recommendation=rec,
        trigger=trigger,
        pulls=state.counts.copy(),
        config=config,
        seed=rng.seed,
    )


def _lucbpp_consts(scheme: PerArm) -> tuple:
    # leader side: no arm union, risk delta/2; rival side: union over K-1 arms
    lo = math.log(5.0 * scheme.D / scheme.delta)
    up = math.log(5.0 * (scheme.K - 1) * scheme.D / scheme.delta)
    return lo, up


def bai_run(
    instance: BanditInstance,
    algorithm: str,
    scheme,
    rng=None,
    round_cap: int = 10**8,
    engine: str = "fast",
) -> RunResult:
    """Run a best-arm baseline on a single-objective instance."""
    if instance.n_objectives != 1:
        raise ValueError("best-arm baselines need a single-objective instance")
    if algorithm not in BAI_ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {BAI_ALGORITHMS}")
    K = instance.n_arms
    if round_cap < K:
        raise ValueError("round_cap must be at least K (the initialisation pulls)")
    if isinstance(scheme, PerArm):
        if scheme.K != K or scheme.D != 1:
            raise ValueError("PerArm scheme dimensions must match the instance")
    elif not (hasattr(scheme, "sigma") and hasattr(scheme, "arm_bonus")):
        raise TypeError("scheme must be PerArm or expose .sigma and .arm_bonus(state, arm)")
    if rng is None:
        raise TypeError("rng is required (an RngStream or a bare seed)")
    rng = _coerce_rng(rng)
    config = _config_echo(algorithm, instance, scheme, None, round_cap)
    if engine not in ("fast", "reference"):
        raise ValueError(f"unknown engine: {engine!r}")

    if engine == "fast" and isinstance(scheme, PerArm):
        from . import _kernels

        if algorithm == "lucbpp":
            logc_lo, logc_up = _lucbpp_consts(scheme)
        else:
            logc_lo = logc_up = scheme.log_const()
        algo_kind = {"lucb": 0, "ugapec": 1, "lucbpp": 2}[algorithm]
        return _kernels.run_bai_fast(
            instance, algo_kind, scheme.sigma, logc_lo, logc_up, rng, round_cap, config,
        )

    if isinstance(scheme, PerArm):
        if algorithm == "lucbpp":
            logc_lo, logc_up = _lucbpp_consts(scheme)

            def bonus_lo(state, i):
                level = logc_lo + 4.0 * math.log(state.t)
                return scheme.sigma * math.sqrt((2.0 / state.counts[i]) * level)

            def bonus_up(state, i):
                level = logc_up + 4.0 * math.log(state.t)
                return scheme.sigma * math.sqrt((2.0 / state.counts[i]) * level)
        else:
            def bonus_lo(state, i):
                return arm_bonus(scheme, state, i)

            bonus_up = bonus_lo
    else:
        def bonus_lo(state, i):
            return scheme.arm_bonus(state, i)

        bonus_up = bonus_lo

    cursor = ObservationCursor(instance, rng)
    state = EmpiricalState.empty(K, 1)
    for a in range(K):
        update(state, a, cursor.next(a))

    while True:
        mu = state.means()[:, 0]
        lo = np.array([mu[i] - bonus_lo(state, i) for i in range(K)])
        up = np.array([mu[i] + bonus_up(state, i) for i in range(K)])
        best = int(np.argmax(mu))
        if algorithm == "ugapec":
            rival = np.array([
                max(up[j] for j in range(K) if j != i) for i in range(K)
            ])
            gap = rival - lo
            b = int(np.argmin(gap))
            others = [j for j in range(K) if j != b]
            c = others[int(np.argmax(up[others]))]
            if gap[b] < 0.0:
                rec, trigger = (b,), TRIGGER_Z
                break
            if state.t + 1 > round_cap:
                rec, trigger = (best,), TRIGGER_CAP
                break
            if state.counts[b] < state.counts[c]:
                a = b
            elif state.counts[c] < state.counts[b]:
                a = c
            else:
                a = min(b, c)
            update(state, a, cursor.next(a))
        else:
            h = best
            others = [j for j in range(K) if j != h]
            l = others[int(np.argmax(up[others]))]
            if lo[h] - up[l] > 0.0:
                rec, trigger = (h,), TRIGGER_Z
                break
            if state.t + 2 > round_cap:
                rec, trigger = (best,), TRIGGER_CAP
                break
            update(state, h, cursor.next(h))
            update(state, l, cursor.next(l))

    return RunResult(
        tau=state.t,
        recommendation=rec,
        trigger=trigger,
        pulls=state.counts.copy(),
        config=config,
        seed=rng.seed,
    )
