"""Experiment harness: configuration, seeded replication, aggregation,
oracle validation, and flat-file persistence.

A bench run writes two artifacts: a JSONL file with one object per run
(instance digest and true means, seed, algorithm, rule, scheme parameters,
tau, trigger, sorted recommendation, correct flag, per-arm pulls) and a CSV
of per-configuration aggregates. Rows carry the true means inline so a
results file can be re-validated later without the instance source at hand.

Determinism contract: run r uses seed base+r; per-rep instances (fresh mode)
are drawn from that same seed's generation stream; rows are merged in seed
order regardless of completion order, so rerunning a bench reproduces the
output byte for byte.
"""

from __future__ import annotations

import csv
import itertools
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import baselines
from .ape import rule_dict, run
from .bandit_model import (
    BanditInstance,
    BernoulliIndependent,
    RngStream,
    covboost_instance,
    default_sigma,
    gen_random_bernoulli,
    load_instance,
)
from .confidence import Pairwise, PerArm, theoretical_k1
from .pareto_core import verify_recommendation
from .rules import EpsCover, EpsPsi, KRelaxed

__all__ = [
    "AggregateReport",
    "ConfigError",
    "ExperimentConfig",
    "THREADS_ENV",
    "aggregate",
    "config_key",
    "grid_configs",
    "pull_ratio",
    "read_jsonl",
    "replicate",
    "resolve_instance",
    "run_rows",
    "validate_rows",
    "write_aggregate_csv",
    "write_jsonl",
]

THREADS_ENV = "PARETO_BANDITS_THREADS"

_ALGOS = ("ape", "psi-unif-elim") + baselines.BAI_ALGORITHMS
_GRID_PARAMS = ("eps1", "eps2", "k", "delta", "k1", "sigma")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one batch of runs.

    instance is a path, "gen:bernoulli:K=..,D=..", or "builtin:covboost".
    k1 is a positive float or the string "theoretical". sigma=None picks the
    family default (1/2 Bernoulli, 1 Gaussian). eps2 and k are mutually
    exclusive; setting one selects the cover / k-relaxed rule for ape.
    """

    instance: str
    algo: str = "ape"
    eps1: float = 0.0
    eps2: float | None = None
    k: int | None = None
    delta: float = 0.1
    k1: float | str = 1.0
    sigma: float | None = None
    reps: int = 1
    seed: int = 0
    round_cap: int = 10**8
    fresh_instance: bool = False
    threads: int | None = None

    def __post_init__(self):
        algo = self.algo[4:] if self.algo.startswith("bai:") else self.algo
        object.__setattr__(self, "algo", algo)
        if algo not in _ALGOS:
            raise ConfigError(f"unknown algo {self.algo!r}; choose from {_ALGOS}")
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError("delta must lie in (0, 1)")
        if self.eps1 < 0.0:
            raise ConfigError("eps1 must be nonnegative")
        if self.eps2 is not None and self.eps2 < 0.0:
            raise ConfigError("eps2 must be nonnegative")
        if self.eps2 is not None and self.k is not None:
            raise ConfigError("eps2 and k are mutually exclusive")
        if self.k is not None and self.k < 1:
            raise ConfigError("k must be >= 1")
        if isinstance(self.k1, str) and self.k1 != "theoretical":
            raise ConfigError('k1 must be a positive number or "theoretical"')
        if not isinstance(self.k1, str) and self.k1 <= 0:
            raise ConfigError('k1 must be a positive number or "theoretical"')
        if self.sigma is not None and self.sigma <= 0:
            raise ConfigError("sigma must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        if self.round_cap < 2:
            raise ConfigError("round_cap must be >= 2")
        if self.fresh_instance and not self.instance.startswith("gen:"):
            raise ConfigError("fresh_instance requires a gen: instance spec")
        if algo in baselines.BAI_ALGORITHMS:
            if self.eps1 != 0.0 or self.eps2 is not None or self.k is not None:
                raise ConfigError("best-arm algos take no rule parameters")
        if algo == "psi-unif-elim" and self.eps2 is not None:
            raise ConfigError("the cover rule applies to ape only")


def _parse_gen_spec(spec: str) -> tuple:
    # gen:bernoulli:K=5,D=8
    parts = spec.split(":")
    if len(parts) != 3 or parts[0] != "gen" or parts[1] != "bernoulli":
        raise ConfigError(f"unsupported generator spec {spec!r}")
    params = {}
    for item in parts[2].split(","):
        key, _, value = item.partition("=")
        if key not in ("K", "D") or not value:
            raise ConfigError(f"unsupported generator spec {spec!r}")
        params[key] = int(value)
    if set(params) != {"K", "D"}:
        raise ConfigError(f"generator spec needs K and D: {spec!r}")
    return params["K"], params["D"]


def resolve_instance(spec: str, seed: int) -> BanditInstance:
    """Materialise an instance spec; gen: specs draw from the seed's stream."""
    if spec == "builtin:covboost":
        return covboost_instance()
    if spec.startswith("gen:"):
        K, D = _parse_gen_spec(spec)
        return gen_random_bernoulli(K, D, RngStream(seed))
    if spec.startswith("builtin:"):
        raise ConfigError(f"unknown builtin instance {spec!r}")
    return load_instance(spec)


def _resolve_sigma(config: ExperimentConfig, instance: BanditInstance) -> float:
    return default_sigma(instance) if config.sigma is None else config.sigma


def _resolve_scheme(config: ExperimentConfig, instance: BanditInstance):
    K, D = instance.means.shape
    sigma = _resolve_sigma(config, instance)
    if config.algo in baselines.BAI_ALGORITHMS:
        return PerArm(delta=config.delta, sigma=sigma, K=K, D=D)
    k1 = theoretical_k1(K, D) if config.k1 == "theoretical" else float(config.k1)
    return Pairwise(delta=config.delta, k1=k1, sigma=sigma)


def _resolve_rule(config: ExperimentConfig, instance: BanditInstance):
    if config.algo in baselines.BAI_ALGORITHMS:
        return None
    if config.eps2 is not None:
        return EpsCover(config.eps1, config.eps2)
    if config.k is not None:
        if config.k > instance.n_arms:
            raise ConfigError(f"k must lie in [1, {instance.n_arms}]")
        return KRelaxed(config.eps1, config.k)
    if config.algo == "psi-unif-elim":
        return KRelaxed(config.eps1, instance.n_arms)
    return EpsPsi(config.eps1)


def _verification_rule(row: dict):
    kind = row["rule"]["kind"]
    if kind == "eps-psi":
        return EpsPsi(row["rule"]["eps1"])
    if kind == "eps-cover":
        return EpsCover(row["rule"]["eps1"], row["rule"]["eps2"])
    if kind == "k-relaxed":
        return KRelaxed(row["rule"]["eps1"], row["rule"]["k"])
    raise ConfigError(f"unknown rule kind {kind!r}")


def config_key(config: ExperimentConfig) -> str:
    """Deterministic short label for aggregate rows."""
    parts = [
        f"instance={config.instance}",
        f"fresh={int(config.fresh_instance)}",
        f"algo={config.algo}",
        f"eps1={config.eps1!r}",
        f"eps2={'-' if config.eps2 is None else repr(config.eps2)}",
        f"k={'-' if config.k is None else config.k}",
        f"delta={config.delta!r}",
        f"k1={config.k1}",
        f"sigma={'auto' if config.sigma is None else repr(config.sigma)}",
        f"cap={config.round_cap}",
        f"seed={config.seed}",
    ]
    return ";".join(parts)


def _execute(config, instance, scheme, rule, rng):
    if config.algo == "ape":
        return run(instance, scheme, rule, rng, round_cap=config.round_cap)
    if config.algo == "psi-unif-elim":
        return baselines.psi_unif_elim(
            instance, scheme, eps1=rule.eps1, k=rule.k,
            rng=rng, round_cap=config.round_cap,
        )
    return baselines.bai_run(
        instance, config.algo, scheme, rng, round_cap=config.round_cap,
    )


def _one_row(config: ExperimentConfig, shared_instance, rep: int) -> dict:
    seed_r = config.seed + rep
    if config.fresh_instance:
        instance = resolve_instance(config.instance, seed_r)
    else:
        instance = shared_instance
    scheme = _resolve_scheme(config, instance)
    rule = _resolve_rule(config, instance)
    result = _execute(config, instance, scheme, rule, RngStream(seed_r))
    if rule is None:
        verify = KRelaxed(0.0, 1)
    else:
        verify = rule
    rec = tuple(sorted(result.recommendation))
    correct = (not result.capped) and verify_recommendation(instance.means, rec, verify)
    row = {
        "instance": instance.digest(),
        "family": "bernoulli" if isinstance(instance.family, BernoulliIndependent) else "gaussian",
        "K": instance.n_arms,
        "D": instance.n_objectives,
        "means": [[float(v) for v in arm] for arm in instance.means],
        "seed": seed_r,
        "algo": config.algo,
        "rule": rule_dict(verify),
        "delta": config.delta,
        "k1": None if config.algo in baselines.BAI_ALGORITHMS
        else (theoretical_k1(instance.n_arms, instance.n_objectives)
              if config.k1 == "theoretical" else float(config.k1)),
        "sigma": _resolve_sigma(config, instance),
        "tau": result.tau,
        "trigger": result.trigger,
        "recommendation": [int(a) for a in rec],
        "correct": bool(correct),
        "pulls": [int(p) for p in result.pulls],
    }
    return row


def _thread_count(config: ExperimentConfig) -> int:
    if config.threads is not None:
        return max(1, config.threads)
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_rows(config: ExperimentConfig) -> list:
    """Execute all replications; rows come back in seed order."""
    shared = None if config.fresh_instance else resolve_instance(config.instance, config.seed)
    if shared is not None:
        # fail fast on scheme/rule problems before fanning out
        _resolve_scheme(config, shared)
        _resolve_rule(config, shared)
    workers = _thread_count(config)
    reps = range(config.reps)
    if workers == 1 or config.reps == 1:
        return [_one_row(config, shared, r) for r in reps]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_one_row, config, shared, r) for r in reps]
        return [f.result() for f in futures]


@dataclass(frozen=True)
class AggregateReport:
    """Per-configuration summary over R runs."""

    key: str
    reps: int
    mean_tau: float
    median_tau: float
    std_tau: float
    err_rate: float
    err_se: float
    mean_rec_size: float
    mean_pulls: tuple

    def __post_init__(self):
        if not 0.0 <= self.err_rate <= 1.0:
            raise ValueError("error rate must lie in [0, 1]")


def aggregate(key: str, rows: list) -> AggregateReport:
    """Summarise rows; capped runs count as errors alongside oracle failures."""
    if not rows:
        raise ValueError("cannot aggregate zero rows")
    taus = np.array([r["tau"] for r in rows], dtype=np.float64)
    reps = len(rows)
    errors = sum(1 for r in rows if not r["correct"])
    err = errors / reps
    pulls = np.array([r["pulls"] for r in rows], dtype=np.float64)
    return AggregateReport(
        key=key,
        reps=reps,
        mean_tau=float(taus.mean()),
        median_tau=float(np.median(taus)),
        std_tau=float(taus.std(ddof=1)) if reps > 1 else 0.0,
        err_rate=err,
        err_se=float(np.sqrt(err * (1.0 - err) / reps)),
        mean_rec_size=float(np.mean([len(r["recommendation"]) for r in rows])),
        mean_pulls=tuple(float(v) for v in pulls.mean(axis=0)),
    )


def replicate(config: ExperimentConfig) -> AggregateReport:
    """Run R seeded replications and summarise them."""
    return aggregate(config_key(config), run_rows(config))


def pull_ratio(numerator: AggregateReport, denominator: AggregateReport) -> tuple:
    """Per-arm mean-pull ratios between two reports on the same instance."""
    num, den = numerator.mean_pulls, denominator.mean_pulls
    if len(num) != len(den):
        raise ValueError("reports cover different arm counts")
    return tuple(n / d for n, d in zip(num, den))


def grid_configs(base: ExperimentConfig, grid: dict) -> list:
    """Cartesian product of parameter sweeps; returns (label, config) pairs."""
    for param in grid:
        if param not in _GRID_PARAMS:
            raise ConfigError(f"grid parameter must be one of {_GRID_PARAMS}")
    if not grid:
        return [("", base)]
    names = sorted(grid)
    out = []
    for values in itertools.product(*(grid[n] for n in names)):
        assignment = dict(zip(names, values))
        label = ",".join(f"{n}={assignment[n]}" for n in names)
        out.append((label, replace(base, **assignment)))
    return out


# ---------------------------------------------------------------------------
# persistence and validation
# ---------------------------------------------------------------------------

def write_jsonl(rows: list, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True))
            fh.write("\n")


def read_jsonl(path) -> list:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


_CSV_COLUMNS = (
    "config_key", "R", "mean_tau", "median_tau", "std_tau",
    "err_rate", "err_se", "mean_rec_size",
)


def write_aggregate_csv(reports: list, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_CSV_COLUMNS)
        for rep in reports:
            w.writerow([
                rep.key, rep.reps, repr(rep.mean_tau), repr(rep.median_tau),
                repr(rep.std_tau), repr(rep.err_rate), repr(rep.err_se),
                repr(rep.mean_rec_size),
            ])


def validate_rows(rows: list) -> list:
    """Re-check stored correct flags against the stored true means.

    Returns indices of rows whose flag disagrees with the oracle.
    """
    bad = []
    for idx, row in enumerate(rows):
        means = np.array(row["means"], dtype=np.float64)
        rule = _verification_rule(row)
        expected = row["trigger"] != "round-cap" and verify_recommendation(
            means, tuple(row["recommendation"]), rule,
        )
        if bool(row["correct"]) != bool(expected):
            bad.append(idx)
    return bad
