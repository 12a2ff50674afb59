"""Jitted run kernels behind the fast engines.

Each kernel mirrors its reference loop expression-for-expression so that
trajectories agree across engines for the same seed. Kernels consume
pre-generated per-arm observation blocks and hand control back to the host
(status GROW) whenever a block runs dry; the host extends that arm's block
from its own stream and re-enters, which cannot change any value because an
arm's n-th observation never depends on chunking.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit
from numba.typed import List as TypedList

from .ape import (
    TRIGGER_CAP,
    TRIGGER_K,
    TRIGGER_Z,
    ObservationCursor,
    RunResult,
)
from .confidence import Pairwise, PerArm
from .rules import EpsCover, EpsPsi, KRelaxed

RULE_EPS_PSI, RULE_EPS_COVER, RULE_K_RELAXED = 0, 1, 2
SCHEME_PAIRWISE, SCHEME_PER_ARM = 0, 1
STATUS_Z, STATUS_K, STATUS_CAP, STATUS_GROW = 0, 1, 2, 3

_TRIGGERS = {STATUS_Z: TRIGGER_Z, STATUS_K: TRIGGER_K, STATUS_CAP: TRIGGER_CAP}


@njit(cache=True, nogil=True)
def _pair_stats(mu, counts, t, K, D, scheme_kind, cg, sigma, perarm_const, mat, bon):
    # margins with +inf diagonal
    for i in range(K):
        mat[i, i] = np.inf
        for j in range(K):
            if j == i:
                continue
            best = mu[i, 0] - mu[j, 0]
            for d in range(1, D):
                v = mu[i, d] - mu[j, d]
                if v > best:
                    best = v
            mat[i, j] = best
    if scheme_kind == SCHEME_PAIRWISE:
        for i in range(K):
            bon[i, i] = 0.0
            li = np.log(4.0 + np.log(float(counts[i])))
            for j in range(i + 1, K):
                lj = np.log(4.0 + np.log(float(counts[j])))
                bracket = cg + li + lj
                v = sigma * 2.0 * np.sqrt(bracket * (1.0 / counts[i] + 1.0 / counts[j]))
                bon[i, j] = v
                bon[j, i] = v
    else:
        level = perarm_const + 4.0 * np.log(float(t))
        bvec = np.empty(K)
        for i in range(K):
            bvec[i] = sigma * np.sqrt((2.0 / counts[i]) * level)
        for i in range(K):
            bon[i, i] = 0.0
            for j in range(K):
                if j != i:
                    bon[i, j] = bvec[i] + bvec[j]


@njit(cache=True, nogil=True)
def _ape_kernel(
    blocks,
    sums,
    counts,
    t,
    rule_kind,
    eps1,
    eps2,
    k_stop,
    scheme_kind,
    cg,
    sigma,
    perarm_const,
    round_cap,
    rec_mask,
):
    K, D = sums.shape
    mu = np.empty((K, D))
    mat = np.empty((K, K))
    bon = np.empty((K, K))
    h = np.empty(K)
    g_plain = np.empty(K)
    g_rule = np.empty(K)
    s_mask = np.empty(K, np.uint8)
    while True:
        for i in range(K):
            for d in range(D):
                mu[i, d] = sums[i, d] / counts[i]
        _pair_stats(mu, counts, t, K, D, scheme_kind, cg, sigma, perarm_const, mat, bon)

        n_opt = 0
        for i in range(K):
            hmin = np.inf
            smin = np.inf
            for j in range(K):
                if j == i:
                    continue
                v = mat[i, j] - bon[i, j]
                if v < hmin:
                    hmin = v
                if mat[i, j] < smin:
                    smin = mat[i, j]
            h[i] = hmin + eps1
            s_mask[i] = 1 if smin >= 0.0 else 0
            if h[i] > 0.0:
                n_opt += 1

        # k-count test precedes the Z-test
        if rule_kind == RULE_K_RELAXED and n_opt >= k_stop:
            left = k_stop
            for i in range(K):
                if h[i] > 0.0 and left > 0:
                    rec_mask[i] = 1
                    left -= 1
                else:
                    rec_mask[i] = 0
            return STATUS_K, -1, t

        for i in range(K):
            gp = -np.inf
            gr = -np.inf
            for j in range(K):
                if j == i:
                    continue
                base = -mat[i, j] - bon[i, j]
                if base > gp:
                    gp = base
                if rule_kind == RULE_EPS_COVER:
                    v = base + (eps2 if h[j] > 0.0 else 0.0)
                    if v > gr:
                        gr = v
            g_plain[i] = gp
            g_rule[i] = gr

        z1 = np.inf
        z2 = np.inf
        for i in range(K):
            if rule_kind == RULE_EPS_COVER:
                sc = g_rule[i] if g_rule[i] > h[i] else h[i]
            else:
                sc = h[i] if s_mask[i] == 1 else (g_plain[i] if g_plain[i] > h[i] else h[i])
            if s_mask[i] == 1:
                if sc < z1:
                    z1 = sc
            else:
                if sc < z2:
                    z2 = sc

        if z1 > 0.0 and z2 > 0.0:
            for i in range(K):
                if rule_kind == RULE_EPS_COVER:
                    rec_mask[i] = 1 if h[i] > 0.0 else 0
                else:
                    rec_mask[i] = 1 if (s_mask[i] == 1 or g_plain[i] <= 0.0) else 0
            return STATUS_Z, -1, t

        if t >= round_cap:
            for i in range(K):
                rec_mask[i] = 1 if (s_mask[i] == 1 or g_plain[i] <= 0.0) else 0
            return STATUS_CAP, -1, t

        # select b (most ambiguous candidate), c (closest challenger)
        best_score = -np.inf
        b = -1
        for i in range(K):
            if h[i] > 0.0:
                continue
            sc = np.inf
            for j in range(K):
                if j == i:
                    continue
                v = mat[i, j] + bon[i, j]
                if v < sc:
                    sc = v
            if sc > best_score:
                best_score = sc
                b = i
        cbest = np.inf
        c = -1
        for j in range(K):
            if j == b:
                continue
            v = mat[b, j] - bon[b, j]
            if v < cbest:
                cbest = v
                c = j
        if counts[b] < counts[c]:
            a = b
        elif counts[c] < counts[b]:
            a = c
        else:
            a = b if b < c else c

        if counts[a] >= blocks[a].shape[0]:
            return STATUS_GROW, a, t
        row = blocks[a][counts[a]]
        for d in range(D):
            sums[a, d] += row[d]
        counts[a] += 1
        t += 1


@njit(cache=True, nogil=True)
def _elim_kernel(
    blocks,
    sums,
    counts,
    t,
    eps1,
    k_stop,
    scheme_kind,
    cg,
    sigma,
    perarm_const,
    round_cap,
    active,
    accepted,
    rec_mask,
):
    K, D = sums.shape
    mu = np.empty((K, D))
    mat = np.empty((K, K))
    bon = np.empty((K, K))
    a1 = np.empty(K, np.uint8)
    p1 = np.empty(K, np.uint8)
    p2 = np.empty(K, np.uint8)
    while True:
        n_active = 0
        for i in range(K):
            if active[i] == 1:
                n_active += 1
                if counts[i] >= blocks[i].shape[0]:
                    return STATUS_GROW, i, t

        if t + n_active > round_cap:
            # best effort: accepted plus empirically non-dominated active arms
            for i in range(K):
                for d in range(D):
                    mu[i, d] = sums[i, d] / counts[i] if counts[i] > 0 else 0.0
            for i in range(K):
                rec_mask[i] = accepted[i]
                if active[i] == 1:
                    dominated = False
                    for j in range(K):
                        if j == i or active[j] != 1:
                            continue
                        worst = -np.inf
                        for d in range(D):
                            v = mu[i, d] - mu[j, d]
                            if v > worst:
                                worst = v
                        if worst < 0.0:
                            dominated = True
                            break
                    if not dominated:
                        rec_mask[i] = 1
            return STATUS_CAP, -1, t

        # one phase: pull every active arm once
        for i in range(K):
            if active[i] == 1:
                row = blocks[i][counts[i]]
                for d in range(D):
                    sums[i, d] += row[d]
                counts[i] += 1
                t += 1

        for i in range(K):
            for d in range(D):
                mu[i, d] = sums[i, d] / counts[i] if counts[i] > 0 else 0.0
        _pair_stats(mu, counts, t, K, D, scheme_kind, cg, sigma, perarm_const, mat, bon)

        # discard arms some active arm beats beyond the bonus
        for i in range(K):
            a1[i] = 0
            if active[i] != 1:
                continue
            keep = True
            for j in range(K):
                if j == i or active[j] != 1:
                    continue
                if -mat[i, j] > bon[i, j]:
                    keep = False
                    break
            a1[i] = 1 if keep else 0

        for i in range(K):
            p1[i] = 0
            if a1[i] != 1:
                continue
            ok = True
            for j in range(K):
                if j == i or a1[j] != 1:
                    continue
                if mat[i, j] + eps1 < bon[i, j]:
                    ok = False
                    break
            p1[i] = 1 if ok else 0

        for j in range(K):
            p2[j] = 0
            if p1[j] != 1:
                continue
            blocked = False
            for i in range(K):
                if a1[i] != 1 or p1[i] == 1:
                    continue
                if mat[i, j] + eps1 <= bon[i, j]:
                    blocked = True
                    break
            p2[j] = 0 if blocked else 1

        n_kcand = 0
        for i in range(K):
            if accepted[i] == 1 or p1[i] == 1:
                n_kcand += 1

        n_left = 0
        for i in range(K):
            if p2[i] == 1:
                accepted[i] = 1
            active[i] = 1 if (a1[i] == 1 and p2[i] == 0) else 0
            if active[i] == 1:
                n_left += 1

        if n_left == 0:
            for i in range(K):
                rec_mask[i] = accepted[i]
            return STATUS_Z, -1, t

        if n_kcand >= k_stop:
            left = k_stop
            for i in range(K):
                if (accepted[i] == 1 or p1[i] == 1) and left > 0:
                    rec_mask[i] = 1
                    left -= 1
                else:
                    rec_mask[i] = 0
            return STATUS_K, -1, t


@njit(cache=True, nogil=True)
def _bai_kernel(
    blocks,
    sums,
    counts,
    t,
    algo_kind,  # 0 lucb, 1 ugapec, 2 lucbpp
    sigma,
    logc_lo,
    logc_up,
    round_cap,
):
    K = counts.shape[0]
    mu = np.empty(K)
    up = np.empty(K)
    lo = np.empty(K)
    while True:
        level_lo = logc_lo + 4.0 * np.log(float(t))
        level_up = logc_up + 4.0 * np.log(float(t))
        for i in range(K):
            mu[i] = sums[i, 0] / counts[i]
            lo[i] = mu[i] - sigma * np.sqrt((2.0 / counts[i]) * level_lo)
            up[i] = mu[i] + sigma * np.sqrt((2.0 / counts[i]) * level_up)

        best = 0
        for i in range(1, K):
            if mu[i] > mu[best]:
                best = i

        if algo_kind == 1:
            # most ambiguous arm by upper-bound gap, then its strongest rival
            b = -1
            bgap = np.inf
            for i in range(K):
                rival = -np.inf
                for j in range(K):
                    if j != i and up[j] > rival:
                        rival = up[j]
                gap = rival - lo[i]
                if gap < bgap:
                    bgap = gap
                    b = i
            c = -1
            cbest = -np.inf
            for j in range(K):
                if j != b and up[j] > cbest:
                    cbest = up[j]
                    c = j
            if bgap < 0.0:
                return STATUS_Z, b, t
            if t + 1 > round_cap:
                return STATUS_CAP, best, t
            if counts[b] < counts[c]:
                a = b
            elif counts[c] < counts[b]:
                a = c
            else:
                a = b if b < c else c
            if counts[a] >= blocks[a].shape[0]:
                return STATUS_GROW, a, t
            sums[a, 0] += blocks[a][counts[a], 0]
            counts[a] += 1
            t += 1
        else:
            h = best
            l = -1
            lbest = -np.inf
            for j in range(K):
                if j != h and up[j] > lbest:
                    lbest = up[j]
                    l = j
            if lo[h] - up[l] > 0.0:
                return STATUS_Z, h, t
            if t + 2 > round_cap:
                return STATUS_CAP, best, t
            if counts[h] >= blocks[h].shape[0]:
                return STATUS_GROW, h, t
            if counts[l] >= blocks[l].shape[0]:
                return STATUS_GROW, l, t
            sums[h, 0] += blocks[h][counts[h], 0]
            counts[h] += 1
            sums[l, 0] += blocks[l][counts[l], 0]
            counts[l] += 1
            t += 2


# ---------------------------------------------------------------------------
# host-side wrappers
# ---------------------------------------------------------------------------

def _rule_codes(rule):
    if isinstance(rule, EpsPsi):
        return RULE_EPS_PSI, rule.eps1, 0.0, 0
    if isinstance(rule, EpsCover):
        return RULE_EPS_COVER, rule.eps1, rule.eps2, 0
    if isinstance(rule, KRelaxed):
        return RULE_K_RELAXED, rule.eps1, 0.0, rule.k
    raise TypeError(f"unknown stopping rule: {rule!r}")


def _scheme_codes(scheme):
    if isinstance(scheme, Pairwise):
        return SCHEME_PAIRWISE, scheme.cg_term(), scheme.sigma, 0.0
    if isinstance(scheme, PerArm):
        return SCHEME_PER_ARM, 0.0, scheme.sigma, scheme.log_const()
    raise TypeError(f"unknown confidence scheme: {scheme!r}")


def _init_state(instance, cursor):
    K, D = instance.means.shape
    sums = np.zeros((K, D))
    counts = np.zeros(K, dtype=np.int64)
    blocks = TypedList()
    for a in range(K):
        sums[a] = cursor.blocks[a][0]
        counts[a] = 1
        blocks.append(cursor.blocks[a])
    return sums, counts, blocks


def run_ape_fast(instance, scheme, rule, rng, round_cap, config):
    K = instance.n_arms
    cursor = ObservationCursor(instance, rng)
    sums, counts, blocks = _init_state(instance, cursor)
    t = K
    rule_kind, eps1, eps2, k_stop = _rule_codes(rule)
    scheme_kind, cg, sigma, perarm_const = _scheme_codes(scheme)
    rec_mask = np.zeros(K, dtype=np.uint8)
    while True:
        status, arm, t = _ape_kernel(
            blocks, sums, counts, t, rule_kind, eps1, eps2, k_stop,
            scheme_kind, cg, sigma, perarm_const, round_cap, rec_mask,
        )
        if status == STATUS_GROW:
            cursor.grow(arm)
            blocks[arm] = cursor.blocks[arm]
            continue
        break
    return RunResult(
        tau=int(t),
        recommendation=tuple(int(a) for a in np.flatnonzero(rec_mask)),
        trigger=_TRIGGERS[status],
        pulls=counts.copy(),
        config=config,
        seed=rng.seed,
    )


def run_elim_fast(instance, scheme, eps1, k, rng, round_cap, config):
    K, D = instance.means.shape
    cursor = ObservationCursor(instance, rng)
    sums = np.zeros((K, D))
    counts = np.zeros(K, dtype=np.int64)
    blocks = TypedList()
    for a in range(K):
        blocks.append(cursor.blocks[a])
    t = 0
    scheme_kind, cg, sigma, perarm_const = _scheme_codes(scheme)
    active = np.ones(K, dtype=np.uint8)
    accepted = np.zeros(K, dtype=np.uint8)
    rec_mask = np.zeros(K, dtype=np.uint8)
    while True:
        status, arm, t = _elim_kernel(
            blocks, sums, counts, t, eps1, k, scheme_kind, cg, sigma,
            perarm_const, round_cap, active, accepted, rec_mask,
        )
        if status == STATUS_GROW:
            cursor.grow(arm)
            blocks[arm] = cursor.blocks[arm]
            continue
        break
    return RunResult(
        tau=int(t),
        recommendation=tuple(int(a) for a in np.flatnonzero(rec_mask)),
        trigger=_TRIGGERS[status],
        pulls=counts.copy(),
        config=config,
        seed=rng.seed,
    )


def run_bai_fast(instance, algo_kind, sigma, logc_lo, logc_up, rng, round_cap, config):
    K = instance.n_arms
    cursor = ObservationCursor(instance, rng)
    sums, counts, blocks = _init_state(instance, cursor)
    t = K
    while True:
        status, arm, t = _bai_kernel(
            blocks, sums, counts, t, algo_kind, sigma, logc_lo, logc_up, round_cap,
        )
        if status == STATUS_GROW:
            cursor.grow(arm)
            blocks[arm] = cursor.blocks[arm]
            continue
        break
    return RunResult(
        tau=int(t),
        recommendation=(int(arm),),
        trigger=_TRIGGERS[status],
        pulls=counts.copy(),
        config=config,
        seed=rng.seed,
    )
