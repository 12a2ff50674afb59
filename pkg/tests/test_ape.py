"""Sampling rule, stopping tests, and the single-run engine."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from pareto_bandits import (
    BanditInstance,
    BernoulliIndependent,
    ContractViolationError,
    EmpiricalState,
    EpsCover,
    EpsPsi,
    GaussianDiagonal,
    KRelaxed,
    Pairwise,
    PerArm,
    RngStream,
    beta,
    check_stop,
    default_sigma,
    empirical_pareto,
    gen_lower_bound_instance,
    gen_random_bernoulli,
    opt_set,
    run,
    select,
    stopping_stats,
    theoretical_k1,
    update,
    verify_recommendation,
)

ENGINES = ("reference", "fast")


def state_from(means, counts):
    """State whose empirical means equal `means` with the given pull counts."""
    means = np.asarray(means, dtype=np.float64)
    K, D = means.shape
    s = EmpiricalState.empty(K, D)
    for a in range(K):
        for _ in range(counts[a]):
            update(s, a, means[a])
    return s


def scheme_with_beta(state, target):
    """Pairwise scheme whose bonus at this state's counts is `target`.

    Valid when all pairs share one bonus value (equal counts, or K=2).
    """
    base = Pairwise(delta=0.1, k1=1.0, sigma=1.0)
    raw = beta(base, state, 0, 1)
    return Pairwise(delta=0.1, k1=1.0, sigma=target / raw)


def noiseless(means):
    means = np.asarray(means, dtype=np.float64)
    return BanditInstance(
        means=means, family=GaussianDiagonal(np.zeros(means.shape[1]))
    )


# ---------------------------------------------------------------------------
# empirical sets
# ---------------------------------------------------------------------------

def test_empirical_sets_small_gap_bonus():
    s = state_from([[1.0], [0.0]], [1, 1])
    scheme = scheme_with_beta(s, 0.1)
    assert empirical_pareto(s) == (0,)
    assert opt_set(s, scheme, 0.0) == (0,)


def test_empirical_sets_large_bonus():
    s = state_from([[1.0], [0.0]], [1, 1])
    scheme = scheme_with_beta(s, 2.0)
    assert empirical_pareto(s) == (0,)
    assert opt_set(s, scheme, 0.0) == ()


def test_empirical_pareto_keeps_ties():
    s = state_from([[0.5, 0.5]] * 3, [1, 1, 1])
    assert empirical_pareto(s) == (0, 1, 2)


def test_empirical_sets_require_all_arms_pulled():
    s = EmpiricalState.empty(2, 1)
    update(s, 0, np.array([1.0]))
    with pytest.raises(RuntimeError):
        empirical_pareto(s)


# ---------------------------------------------------------------------------
# selection
# ---------------------------------------------------------------------------

def test_select_frozen_example_tied_counts():
    s = state_from([[1.0], [0.0]], [4, 4])
    scheme = scheme_with_beta(s, 2.0)
    b, c, a = select(s, scheme, 0.0)
    assert (b, c, a) == (0, 1, 0)  # scores 1+2=3 vs -1+2=1; count tie -> min


def test_select_frozen_example_least_pulled():
    s = state_from([[1.0], [0.0]], [5, 4])
    scheme = scheme_with_beta(s, 2.0)
    b, c, a = select(s, scheme, 0.0)
    assert (b, c, a) == (0, 1, 1)


def test_select_contract_violation_when_all_arms_confident():
    s = state_from([[1.0, 0.0], [0.0, 1.0]], [1, 1])
    scheme = scheme_with_beta(s, 0.5)  # incomparable pair: h_i = 1 - 0.5 > 0
    assert opt_set(s, scheme, 0.0) == (0, 1)
    with pytest.raises(ContractViolationError):
        select(s, scheme, 0.0)


@given(st.integers(0, 10**6))
@settings(max_examples=60, deadline=None)
def test_select_never_proposes_a_confident_arm(seed):
    rng = np.random.default_rng(seed)
    K = int(rng.integers(2, 6))
    D = int(rng.integers(1, 4))
    means = rng.normal(size=(K, D))
    counts = rng.integers(1, 30, size=K)
    s = state_from(means, counts)
    scheme = Pairwise(delta=0.1, k1=1.0, sigma=float(rng.uniform(0.2, 2.0)))
    eps1 = float(rng.uniform(0.0, 0.3))
    confident = set(opt_set(s, scheme, eps1))
    if len(confident) == K:
        with pytest.raises(ContractViolationError):
            select(s, scheme, eps1)
        return
    b, c, a = select(s, scheme, eps1)
    assert b not in confident
    assert c != b
    assert a in (b, c)
    assert s.counts[a] == min(s.counts[b], s.counts[c])


@given(st.integers(0, 10**6))
@settings(max_examples=60, deadline=None)
def test_select_single_objective_scalar_form(seed):
    # with one objective the rule must reduce to plain upper/lower bounds on
    # mean differences; recompute b and c from scalars and compare
    rng = np.random.default_rng(seed)
    K = int(rng.integers(2, 7))
    means = rng.normal(size=(K, 1))
    counts = rng.integers(1, 50, size=K)
    s = state_from(means, counts)
    scheme = Pairwise(delta=0.05, k1=1.0, sigma=1.0)
    mu = s.means()[:, 0]
    bon = np.array(
        [[0.0 if i == j else beta(scheme, s, i, j) for j in range(K)] for i in range(K)]
    )
    h = [
        min(mu[i] - mu[j] - bon[i][j] for j in range(K) if j != i) for i in range(K)
    ]
    ambiguous = [i for i in range(K) if h[i] <= 0.0]
    if not ambiguous:
        return
    b_scalar = max(
        ambiguous,
        key=lambda i: (
            min(mu[i] - mu[j] + bon[i][j] for j in range(K) if j != i),
            -i,
        ),
    )
    c_scalar = min(
        (j for j in range(K) if j != b_scalar),
        key=lambda j: (mu[b_scalar] - mu[j] - bon[b_scalar][j], j),
    )
    b, c, _ = select(s, scheme, 0.0)
    assert (b, c) == (b_scalar, c_scalar)


# ---------------------------------------------------------------------------
# stopping statistics and decisions
# ---------------------------------------------------------------------------

def test_stopping_stats_frozen_example():
    s = state_from([[1.0], [0.0]], [1, 1])
    scheme = scheme_with_beta(s, 0.1)
    z1, z2 = stopping_stats(s, scheme, EpsPsi(0.0))
    assert z1 == pytest.approx(0.9, rel=1e-12)
    assert z2 == pytest.approx(0.9, rel=1e-12)
    assert check_stop(s, scheme, EpsPsi(0.0)) == ((0,), "z-test")


def test_stopping_stats_wide_bonus_blocks():
    s = state_from([[1.0], [0.0]], [1, 1])
    scheme = scheme_with_beta(s, 2.0)
    z1, z2 = stopping_stats(s, scheme, EpsPsi(0.0))
    assert z1 == pytest.approx(-1.0, rel=1e-12)
    assert check_stop(s, scheme, EpsPsi(0.0)) is None


def test_k_count_fires_even_when_z_test_fails():
    # two confidently optimal arms, one still-ambiguous arm
    s = state_from([[1.0, 1.0], [0.0, 2.0], [0.9, 0.0]], [1, 1, 1])
    scheme = scheme_with_beta(s, 0.5)
    z1, z2 = stopping_stats(s, scheme, EpsPsi(0.0))
    assert z2 < 0  # the Z-test alone would not stop
    assert opt_set(s, scheme, 0.0) == (0, 1)
    assert check_stop(s, scheme, KRelaxed(0.0, 1)) == ((0,), "k-count")
    assert check_stop(s, scheme, KRelaxed(0.0, 2)) == ((0, 1), "k-count")
    assert check_stop(s, scheme, KRelaxed(0.0, 3)) is None


def test_eps_psi_recommendation_includes_undecided_non_dominated():
    # arm 1 is empirically dominated but not confidently dominated
    # (mhat(1,0) - beta = -0.05 <= 0), so it joins the recommendation
    s = state_from([[1.0], [0.95]], [1, 1])
    scheme = scheme_with_beta(s, 0.1)
    rec, trigger = check_stop(s, scheme, EpsPsi(0.2))
    assert trigger == "z-test"
    assert rec == (0, 1)
    # while a confidently dominated arm stays out even under a huge eps1
    s2 = state_from([[1.0], [0.0]], [1, 1])
    rec2, _ = check_stop(s2, scheme_with_beta(s2, 0.1), EpsPsi(2.0))
    assert rec2 == (0,)


def test_eps_cover_recommends_confident_set():
    s = state_from([[1.0], [0.0]], [1, 1])
    scheme = scheme_with_beta(s, 0.1)
    rec, trigger = check_stop(s, scheme, EpsCover(0.0, 0.0))
    assert trigger == "z-test"
    assert rec == (0,)


def test_eps_cover_stops_no_later_than_plain_on_any_state():
    rng = np.random.default_rng(5)
    for _ in range(40):
        K = int(rng.integers(2, 5))
        D = int(rng.integers(1, 3))
        s = state_from(rng.normal(size=(K, D)), rng.integers(1, 20, size=K))
        scheme = Pairwise(delta=0.1, k1=1.0, sigma=float(rng.uniform(0.3, 1.5)))
        eps2 = float(rng.uniform(0.0, 0.5))
        if check_stop(s, scheme, EpsPsi(0.0)) is not None:
            assert check_stop(s, scheme, EpsCover(0.0, eps2)) is not None


def test_single_objective_z1_alone_decides():
    # D=1, eps1=0: whenever Z1 > 0 the second statistic is positive too
    rng = np.random.default_rng(11)
    inst = BanditInstance(
        means=np.array([[0.8], [0.4], [0.1]]), family=BernoulliIndependent()
    )
    scheme = Pairwise(delta=0.2, k1=1.0, sigma=0.5)
    stream = RngStream(3)
    s = EmpiricalState.empty(3, 1)
    for a in range(3):
        update(s, a, stream.draw_block(inst, a, 1)[0])
    fired_same_round = 0
    for _ in range(400):
        a = int(rng.integers(0, 3))
        update(s, a, stream.draw_block(inst, a, 1)[0])
        z1, z2 = stopping_stats(s, scheme, EpsPsi(0.0))
        if z1 > 0.0:
            assert z2 > 0.0
            fired_same_round += 1
    assert fired_same_round > 0  # the equivalence was actually exercised


# ---------------------------------------------------------------------------
# full runs
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("engine", ENGINES)
def test_noiseless_run_frozen_trajectory(engine):
    inst = noiseless([[1.0, 1.0], [0.0, 0.0]])
    scheme = Pairwise(delta=0.1, k1=1.0, sigma=1.0)
    res = run(inst, scheme, EpsPsi(0.0), RngStream(0), engine=engine)
    assert res.tau == 87
    assert res.recommendation == (0,)
    assert res.trigger == "z-test"
    assert tuple(res.pulls) == (44, 43)
    assert res.pulls.sum() == res.tau
    assert not res.capped
    # the stop round is exactly the first time the pair bonus drops below the
    # true margin 1: bonus at (43,43) still blocks, at (44,43) it does not
    assert beta(scheme, state_from(inst.means, [43, 43]), 0, 1) >= 1.0
    assert beta(scheme, state_from(inst.means, [44, 43]), 0, 1) < 1.0


def test_same_seed_same_result():
    inst = gen_random_bernoulli(4, 2, RngStream(77))
    scheme = Pairwise(delta=0.2, k1=1.0, sigma=0.5)
    a = run(inst, scheme, EpsPsi(0.05), RngStream(9))
    b = run(inst, scheme, EpsPsi(0.05), RngStream(9))
    assert a.tau == b.tau
    assert a.recommendation == b.recommendation
    assert np.array_equal(a.pulls, b.pulls)
    assert a.seed == b.seed == 9


def test_run_accepts_bare_seed():
    inst = gen_random_bernoulli(3, 2, RngStream(5))
    scheme = Pairwise(delta=0.2, k1=1.0, sigma=0.5)
    assert run(inst, scheme, EpsPsi(0.1), 4).seed == 4


@pytest.mark.parametrize(
    "rule",
    [
        EpsPsi(0.0),
        EpsPsi(0.1),
        EpsCover(0.0, 0.2),
        EpsCover(0.05, 0.1),
        KRelaxed(0.0, 2),
        KRelaxed(0.1, 1),
    ],
    ids=str,
)
@pytest.mark.parametrize(
    "scheme_name", ["pairwise", "pairwise-theoretical", "per-arm"]
)
def test_engines_agree(rule, scheme_name):
    inst = gen_random_bernoulli(4, 2, RngStream(123))
    scheme = {
        "pairwise": Pairwise(delta=0.2, k1=1.0, sigma=0.5),
        "pairwise-theoretical": Pairwise(delta=0.2, k1=12.0, sigma=0.5),
        "per-arm": PerArm(delta=0.2, sigma=0.5, K=4, D=2),
    }[scheme_name]
    for seed in (0, 1, 2):
        ref = run(inst, scheme, rule, RngStream(seed), engine="reference")
        fast = run(inst, scheme, rule, RngStream(seed), engine="fast")
        assert ref.tau == fast.tau
        assert ref.recommendation == fast.recommendation
        assert ref.trigger == fast.trigger
        assert np.array_equal(ref.pulls, fast.pulls)


def test_engines_agree_on_capped_runs():
    inst = gen_random_bernoulli(5, 3, RngStream(50))
    scheme = Pairwise(delta=0.01, k1=1.0, sigma=0.5)
    for cap in (5, 12, 200):
        ref = run(inst, scheme, EpsPsi(0.0), RngStream(1), round_cap=cap, engine="reference")
        fast = run(inst, scheme, EpsPsi(0.0), RngStream(1), round_cap=cap, engine="fast")
        assert ref.trigger == fast.trigger == "round-cap"
        assert ref.capped and fast.capped
        assert ref.tau == fast.tau == cap
        assert ref.recommendation == fast.recommendation
        assert np.array_equal(ref.pulls, fast.pulls)


def test_parallel_tests_stop_no_later_pointwise():
    # the sampling rule depends only on eps1, so for one seed the pull
    # trajectories coincide until the earlier rule stops
    inst = gen_random_bernoulli(4, 2, RngStream(21))
    scheme = Pairwise(delta=0.1, k1=1.0, sigma=0.5)
    for seed in range(10):
        tau_plain = run(inst, scheme, EpsPsi(0.0), RngStream(seed)).tau
        for eps2 in (0.0, 0.1, 0.5):
            tau_cover = run(inst, scheme, EpsCover(0.0, eps2), RngStream(seed)).tau
            assert tau_cover <= tau_plain
        for k in (1, 2, 3, 4):
            tau_k = run(inst, scheme, KRelaxed(0.0, k), RngStream(seed)).tau
            assert tau_k <= tau_plain


def test_relaxation_to_one_arm_is_faster_on_the_hard_family():
    inst = gen_lower_bound_instance(4, 0.5)
    scheme = Pairwise(delta=0.1, k1=1.0, sigma=1.0)
    wins = 0
    for seed in range(100):
        tau1 = run(inst, scheme, KRelaxed(0.0, 1), RngStream(seed)).tau
        tau4 = run(inst, scheme, KRelaxed(0.0, 4), RngStream(seed)).tau
        wins += tau1 < tau4
    assert wins >= 95


def test_completed_runs_verify_against_the_oracle():
    scheme = Pairwise(delta=0.1, k1=theoretical_k1(3, 2), sigma=0.5)
    errors = 0
    for seed in range(50):
        inst = gen_random_bernoulli(3, 2, RngStream(1000 + seed))
        res = run(inst, scheme, EpsPsi(0.2), RngStream(seed))
        assert not res.capped
        ok = verify_recommendation(inst.means, res.recommendation, EpsPsi(0.2))
        ok_brute = oracles.brute_verify(
            inst.means, res.recommendation, "eps-psi", eps1=0.2
        )
        assert ok == ok_brute
        errors += not ok
    assert errors <= 5  # delta = 0.1 over 50 runs; generous slack


def test_krelaxed_run_recommends_k_arms():
    inst = gen_random_bernoulli(5, 3, RngStream(8))
    scheme = Pairwise(delta=0.1, k1=1.0, sigma=0.5)
    res = run(inst, scheme, KRelaxed(0.0, 1), RngStream(2))
    if res.trigger == "k-count":
        assert len(res.recommendation) == 1
    assert verify_recommendation(inst.means, res.recommendation, KRelaxed(0.0, 1))


def test_run_validation():
    inst = gen_random_bernoulli(4, 2, RngStream(0))
    scheme = Pairwise(delta=0.1)
    with pytest.raises(ValueError):
        run(inst, scheme, EpsPsi(0.0), RngStream(0), round_cap=3)  # cap < K
    with pytest.raises(ValueError):
        run(inst, scheme, KRelaxed(0.0, 5), RngStream(0))  # k > K
    with pytest.raises(ValueError):
        run(inst, PerArm(delta=0.1, sigma=1.0, K=3, D=2), EpsPsi(0.0), RngStream(0))
    with pytest.raises(ValueError):
        run(inst, scheme, EpsPsi(0.0), RngStream(0), engine="turbo")


def test_config_echo_contents():
    inst = gen_random_bernoulli(3, 2, RngStream(1))
    scheme = Pairwise(delta=0.2, k1=1.0, sigma=0.5)
    res = run(inst, scheme, EpsCover(0.1, 0.3), RngStream(6), round_cap=10**6)
    assert res.config["algo"] == "ape"
    assert res.config["instance"]["digest"] == inst.digest()
    assert res.config["scheme"]["kind"] == "pairwise"
    assert res.config["rule"] == {"kind": "eps-cover", "eps1": 0.1, "eps2": 0.3}
    assert res.config["round_cap"] == 10**6
