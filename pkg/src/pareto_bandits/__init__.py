"""Fixed-confidence Pareto set identification in multivariate bandits.

Exact Pareto geometry (margins, gaps, sample-complexity bounds), an adaptive
sampling rule with three stopping/recommendation rules, anytime confidence
bonuses, elimination and best-arm baselines, and a seeded benchmark harness.
"""

from .rules import EpsCover, EpsPsi, KRelaxed, StoppingRule
from .pareto_core import (
    DegenerateInstanceError,
    GapReport,
    delta_tilde,
    gaps,
    margins,
    max_margin_matrix,
    pareto_set,
    sample_complexity_bound,
    verify_recommendation,
)
from .bandit_model import (
    BanditInstance,
    BernoulliIndependent,
    GaussianDiagonal,
    InstanceParseError,
    RngStream,
    covboost_instance,
    default_sigma,
    gen_lower_bound_instance,
    gen_random_bernoulli,
    load_instance,
    write_instance,
)
from .confidence import (
    CalibrationError,
    EmpiricalState,
    Pairwise,
    PerArm,
    StateError,
    arm_bonus,
    beta,
    mhat_margins,
    theoretical_k1,
    update,
)
from .ape import (
    TRIGGER_CAP,
    TRIGGER_K,
    TRIGGER_Z,
    ContractViolationError,
    RunResult,
    check_stop,
    empirical_pareto,
    opt_set,
    run,
    select,
    stopping_stats,
)
from .baselines import BAI_ALGORITHMS, EliminationState, bai_run, psi_unif_elim
from .harness import (
    AggregateReport,
    ConfigError,
    ExperimentConfig,
    aggregate,
    config_key,
    grid_configs,
    pull_ratio,
    read_jsonl,
    replicate,
    resolve_instance,
    run_rows,
    validate_rows,
    write_aggregate_csv,
    write_jsonl,
)

__version__ = "0.1.0"
