"""Sweep the cover-slack parameter of the (eps1, eps2) stopping rule on a
fixed 5-arm, 2-objective Bernoulli instance with three Pareto-optimal arms.
Larger slack lets the rule stop with a smaller covering recommendation, so
mean stopping time should fall (weakly) along the grid."""

import click
import numpy as np

from pareto_bandits import (
    BanditInstance,
    BernoulliIndependent,
    EpsCover,
    Pairwise,
    RngStream,
    pareto_set,
    run,
    verify_recommendation,
)

MEANS = np.array([
    [0.50, 0.40],
    [0.45, 0.45],
    [0.40, 0.50],
    [0.30, 0.30],
    [0.20, 0.42],
])


@click.command()
@click.option("--delta", default=0.01, show_default=True)
@click.option("--reps", default=200, show_default=True)
@click.option("--round-cap", default=10**7, show_default=True)
@click.option("--grid", default="0.0,0.06,0.12,0.18,0.24,0.30", show_default=True)
def main(delta, reps, round_cap, grid):
    inst = BanditInstance(means=MEANS, family=BernoulliIndependent())
    scheme = Pairwise(delta=delta, k1=1.0, sigma=0.5)
    click.echo(f"true Pareto set: {pareto_set(MEANS)}  reps={reps} delta={delta}")
    for eps2 in (float(v) for v in grid.split(",")):
        rule = EpsCover(0.0, eps2)
        taus, errors = [], 0
        for seed in range(reps):
            res = run(inst, scheme, rule, RngStream(seed), round_cap=round_cap)
            ok = (not res.capped) and verify_recommendation(
                MEANS, res.recommendation, rule)
            taus.append(res.tau)
            errors += not ok
        taus = np.array(taus)
        click.echo(f"eps2={eps2:.2f}: mean tau={taus.mean():9.1f}  "
                   f"median={np.median(taus):8.1f}  errors={errors}/{reps}")


if __name__ == "__main__":
    main()
