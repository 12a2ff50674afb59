"""Replicate the vaccine-booster experiment: delta-correctness of the
adaptive rule with the k-relaxed stopping rule on the embedded 20-arm,
3-objective dataset, theoretical union-bound constant."""

import click
import numpy as np

from pareto_bandits import (
    ExperimentConfig,
    covboost_instance,
    pareto_set,
    run_rows,
)


@click.command()
@click.option("--k", default=20, show_default=True, help="k-relaxed stopping parameter.")
@click.option("--delta", default=0.1, show_default=True)
@click.option("--reps", default=50, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--round-cap", default=10**7, show_default=True)
def main(k, delta, reps, seed, round_cap):
    cfg = ExperimentConfig(
        instance="builtin:covboost",
        algo="ape",
        eps1=0.0,
        k=k,
        delta=delta,
        k1="theoretical",
        reps=reps,
        seed=seed,
        round_cap=round_cap,
    )
    rows = run_rows(cfg)
    taus = np.array([r["tau"] for r in rows])
    errors = sum(1 for r in rows if not r["correct"])
    star = pareto_set(covboost_instance().means)
    click.echo(f"true Pareto set: {star}")
    click.echo(f"reps={reps} delta={delta} k={k}")
    click.echo(f"errors: {errors}/{reps} (allowed rate {delta})")
    click.echo(f"tau: mean={taus.mean():.0f} median={np.median(taus):.0f} max={taus.max()}")


if __name__ == "__main__":
    main()
