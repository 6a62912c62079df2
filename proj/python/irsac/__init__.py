"""Joint admission control and power minimisation for IRS-assisted downlinks.

The heavy lifting lives in the compiled ``_core`` extension; this package re-exports it
and adds a few conveniences.
"""

from ._core import (
    CHANNEL_STREAM,
    PHASE_STREAM,
    SOLVER_STREAM,
    Algorithm,
    AppConfig,
    ChannelSet,
    ConfigError,
    ExperimentPlan,
    ExperimentSettings,
    MetricsRecord,
    NumericalError,
    PddConfig,
    Point2,
    Scenario,
    SolveResult,
    SolveStatus,
    SummaryRow,
    aggregate,
    db_to_linear,
    dbm_to_watts,
    derive_seed,
    effective_channels,
    exhaustive_admission,
    generate_channels,
    linear_to_db,
    load_config,
    monte_carlo,
    parse_config,
    path_loss_db,
    pdd_solve,
    random_phases,
    run_no_irs,
    sinr_all,
    solve_fixed_theta,
    total_power,
)

__all__ = [name for name in dir() if not name.startswith("_")]


def solve_trial(config: AppConfig, seed: int, trial: int = 0) -> SolveResult:
    """Solve one trial of ``config`` with the same seed streams as the CLI and the sweeps."""
    channels = generate_channels(config.scenario, derive_seed(seed, CHANNEL_STREAM, trial))
    pdd = config.pdd
    pdd.seed = derive_seed(seed, SOLVER_STREAM, trial)
    return pdd_solve(channels, config.scenario, pdd)


__all__.append("solve_trial")
