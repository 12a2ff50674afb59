"""Sweep the k-relaxed stopping parameter on fresh random Bernoulli
instances and compare against the uniform elimination baseline at k = K.
Prints one line per configuration with mean/median stopping time."""

import click
import numpy as np

from pareto_bandits import ExperimentConfig, run_rows


@click.command()
@click.option("--n-arms", default=5, show_default=True)
@click.option("--n-objectives", default=8, show_default=True)
@click.option("--eps1", default=0.005, show_default=True)
@click.option("--delta", default=0.1, show_default=True)
@click.option("--reps", default=200, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--round-cap", default=10**7, show_default=True)
def main(n_arms, n_objectives, eps1, delta, reps, seed, round_cap):
    base = dict(
        instance=f"gen:bernoulli:K={n_arms},D={n_objectives}",
        eps1=eps1,
        delta=delta,
        k1=1.0,
        reps=reps,
        seed=seed,
        round_cap=round_cap,
        fresh_instance=True,
    )
    configs = [(f"ape k={k}", ExperimentConfig(algo="ape", k=k, **base))
               for k in range(1, n_arms + 1)]
    configs.append(("psi-unif-elim", ExperimentConfig(algo="psi-unif-elim", k=n_arms, **base)))
    click.echo(f"{reps} fresh instances, K={n_arms}, D={n_objectives}, "
               f"eps1={eps1}, delta={delta}")
    for label, cfg in configs:
        rows = run_rows(cfg)
        taus = np.array([r["tau"] for r in rows])
        errors = sum(1 for r in rows if not r["correct"])
        click.echo(f"{label:>14}: mean tau={taus.mean():10.1f}  "
                   f"median={np.median(taus):9.1f}  errors={errors}/{reps}")


if __name__ == "__main__":
    main()
