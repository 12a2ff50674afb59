"""Command line interface.

Subcommands: run (one seeded run, JSON to stdout), bench (seeded
replications over an optional parameter grid, JSONL rows plus an aggregate
CSV), gen (materialise an instance spec as CSV), bound (print the
sample-complexity bound), validate (re-check a results file against its
stored means), dataset (print the embedded vaccine booster table).
Thread count comes from the PARETO_BANDITS_THREADS environment variable.
"""

from __future__ import annotations

import json

import click

from . import harness
from .bandit_model import InstanceParseError, covboost_instance, write_instance
from .pareto_core import sample_complexity_bound

_CONFIG_OPTIONS = [
    click.option(
        "--instance", required=True,
        help="instance CSV path, gen:bernoulli:K=..,D=.., or builtin:covboost",
    ),
    click.option("--eps1", type=float, default=0.0, show_default=True,
                 help="optimality slack"),
    click.option("--eps2", type=float, default=None,
                 help="cover slack; selects the cover rule (ape only)"),
    click.option("--k", type=int, default=None,
                 help="recommendation budget; selects the k-relaxed rule"),
    click.option("--delta", type=float, default=0.1, show_default=True,
                 help="risk level"),
    click.option("--k1", default="1", show_default=True,
                 help='pairwise-bonus union mass: positive number or "theoretical"'),
    click.option("--sigma", type=float, default=None,
                 help="subgaussian scale (default: 1/2 Bernoulli, 1 Gaussian)"),
    click.option("--seed", type=int, default=0, show_default=True,
                 help="base seed; run r uses seed+r"),
    click.option("--cap", "round_cap", type=int, default=10**8,
                 show_default=True, help="hard pull budget per run"),
]


def _config_options(fn):
    for dec in reversed(_CONFIG_OPTIONS):
        fn = dec(fn)
    return fn


def _parse_k1(text: str):
    if text == "theoretical":
        return text
    try:
        return float(text)
    except ValueError:
        raise click.BadParameter('k1 must be a positive number or "theoretical"')


_FAILURES = (harness.ConfigError, InstanceParseError, ValueError, OSError)


def _build_config(instance, algo, eps1, eps2, k, delta, k1, sigma, seed,
                  round_cap, reps=1, fresh=False):
    return harness.ExperimentConfig(
        instance=instance,
        algo=algo,
        eps1=eps1,
        eps2=eps2,
        k=k,
        delta=delta,
        k1=_parse_k1(k1),
        sigma=sigma,
        reps=reps,
        seed=seed,
        round_cap=round_cap,
        fresh_instance=fresh,
    )


@click.group()
def main():
    """Fixed-confidence Pareto set identification experiments."""


@main.command("run")
@_config_options
@click.option("--algo", default="ape", show_default=True,
              help="ape | psi-unif-elim | lucb | ugapec | lucbpp")
def run_cmd(instance, eps1, eps2, k, delta, k1, sigma, seed, round_cap, algo):
    """Execute one seeded run and print its result row as JSON."""
    try:
        config = _build_config(instance, algo, eps1, eps2, k, delta, k1,
                               sigma, seed, round_cap)
        row = harness.run_rows(config)[0]
    except _FAILURES as exc:
        raise click.ClickException(str(exc))
    click.echo(json.dumps(row, sort_keys=True, indent=2))


def _parse_grid(specs) -> dict:
    grid = {}
    for spec in specs:
        param, _, values = spec.partition("=")
        if not values or param not in ("eps1", "eps2", "k", "delta", "k1", "sigma"):
            raise click.BadParameter(f"bad grid spec {spec!r}")
        if param in grid:
            raise click.BadParameter(f"grid parameter {param!r} given twice")
        items = [v.strip() for v in values.split(",") if v.strip()]
        if param == "k":
            grid[param] = [int(v) for v in items]
        elif param == "k1":
            grid[param] = [_parse_k1(v) for v in items]
        else:
            grid[param] = [float(v) for v in items]
    return grid


@main.command("bench")
@_config_options
@click.option("--algo", default="ape", show_default=True,
              help="comma-separated list: ape,psi-unif-elim,lucb,ugapec,lucbpp")
@click.option("--reps", type=int, default=100, show_default=True,
              help="replications per configuration")
@click.option("--out", required=True, type=click.Path(),
              help="JSONL output path; aggregates go to <out>.agg.csv")
@click.option("--grid", "grid_specs", multiple=True,
              help="parameter sweep param=v1,v2,... (repeatable)")
@click.option("--fresh-instance-per-rep", "fresh", is_flag=True, default=False,
              help="draw a new random instance for every replication")
def bench_cmd(instance, eps1, eps2, k, delta, k1, sigma, seed, round_cap,
              algo, reps, out, grid_specs, fresh):
    """Run seeded replications and write JSONL rows plus an aggregate CSV."""
    try:
        grid = _parse_grid(grid_specs)
        algos = [a.strip() for a in algo.split(",") if a.strip()]
        if not algos:
            raise click.BadParameter("at least one algorithm is required")
        all_rows = []
        reports = []
        for name in algos:
            base = _build_config(instance, name, eps1, eps2, k, delta, k1,
                                 sigma, seed, round_cap, reps=reps, fresh=fresh)
            for _, cfg in harness.grid_configs(base, grid):
                rows = harness.run_rows(cfg)
                key = harness.config_key(cfg)
                for row in rows:
                    row["config_key"] = key
                all_rows.extend(rows)
                reports.append(harness.aggregate(key, rows))
        harness.write_jsonl(all_rows, out)
        agg_path = f"{out}.agg.csv"
        harness.write_aggregate_csv(reports, agg_path)
    except _FAILURES as exc:
        raise click.ClickException(str(exc))
    for rep in reports:
        click.echo(
            f"{rep.key}: R={rep.reps} mean_tau={rep.mean_tau:.1f} "
            f"err_rate={rep.err_rate:.4f}"
        )
    click.echo(f"wrote {len(all_rows)} rows to {out} and aggregates to {agg_path}")


@main.command("gen")
@click.option("--instance", required=True,
              help="gen:bernoulli:K=..,D=.. spec or builtin:covboost")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
def gen_cmd(instance, seed, out):
    """Materialise an instance spec as an instance CSV."""
    try:
        inst = harness.resolve_instance(instance, seed)
        write_instance(inst, out)
    except _FAILURES as exc:
        raise click.ClickException(str(exc))
    click.echo(f"wrote K={inst.n_arms} D={inst.n_objectives} instance to {out}")


@main.command("bound")
@click.option("--instance", required=True,
              help="instance CSV path, gen: spec, or builtin:covboost")
@click.option("--delta", type=float, default=0.1, show_default=True)
@click.option("--eps1", type=float, default=0.0, show_default=True)
@click.option("--k", type=int, default=None)
@click.option("--seed", type=int, default=0, show_default=True,
              help="seed for gen: instance specs")
def bound_cmd(instance, delta, eps1, k, seed):
    """Print the expected-sample-complexity bound for an instance."""
    try:
        inst = harness.resolve_instance(instance, seed)
        value = sample_complexity_bound(inst.means, delta, eps1, k)
    except _FAILURES as exc:
        raise click.ClickException(str(exc))
    click.echo(f"{value:.10g}")


@main.command("validate")
@click.argument("results", type=click.Path(exists=True, dir_okay=False))
def validate_cmd(results):
    """Re-check a bench JSONL file against its stored true means."""
    try:
        rows = harness.read_jsonl(results)
        bad = harness.validate_rows(rows)
    except _FAILURES as exc:
        raise click.ClickException(str(exc))
    if bad:
        shown = ", ".join(str(i) for i in bad[:10])
        raise click.ClickException(
            f"{len(bad)} of {len(rows)} rows disagree with the oracle (rows {shown})"
        )
    click.echo(f"validated {len(rows)} rows: stored flags match the oracle")


@main.command("dataset")
def dataset_cmd():
    """Print the embedded vaccine booster dataset (20 arms, 3 objectives)."""
    inst = covboost_instance()
    D = inst.n_objectives
    click.echo("arm,label," + ",".join(f"c{d + 1}" for d in range(D)))
    for a in range(inst.n_arms):
        cells = ",".join(f"{v:g}" for v in inst.means[a])
        click.echo(f"{a},{inst.labels[a]},{cells}")
    variances = ",".join(f"{v:g}" for v in inst.family.variances)
    scale = ",".join(f"{v:g}" for v in inst.scale)
    click.echo(f"# variances: {variances}")
    click.echo(f"# scale: {scale}")


if __name__ == "__main__":
    main()
