"""Reachability of ReLU-controlled affine systems with adaptive template polytopes."""

from ._core import (
    Box,
    BnBCapExceeded,
    BnBResult,
    ConfigError,
    ControlledSystem,
    DimensionError,
    DirectionStats,
    Error,
    ExactMaxResult,
    MAX_ORACLE_NEURONS,
    Network,
    NumericalError,
    Polytope,
    RankDeficientError,
    ReachAborted,
    ReachResult,
    RunConfig,
    audit,
    build_equivalent_step,
    exact_maximize,
    load_config,
    load_result,
    load_weights,
    lower_bound,
    make_system,
    maximize,
    parse_config,
    parse_result,
    polygon_area,
    propagate,
    reach,
    save_weights,
    simulate,
    step_directions,
    unroll,
    unrolled_closed_loop,
    upper_bound_objective,
)

__version__ = "0.1.0"


def run_config(path, **overrides):
    """Load a config file, apply keyword overrides and run reach on it.

    Accepted overrides: horizon, epsilon, lam, rank_tol, node_cap, threads.
    Returns (config, system, result).
    """
    config = load_config(path)
    threads = overrides.pop("threads", 0)
    for key, value in overrides.items():
        if not hasattr(config, key):
            raise TypeError(f"unknown override '{key}'")
        setattr(config, key, value)
    config.validate()
    system = make_system(config)
    result = reach(
        system,
        config.horizon,
        epsilon=config.epsilon,
        lam=config.lam,
        rank_tol=config.rank_tol,
        node_cap=config.node_cap,
        threads=threads,
    )
    return config, system, result
