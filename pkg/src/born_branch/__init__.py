"""Simulation and verification toolkit for truncated branching processes.

Exact tree counting, random-walk and diffusion Monte Carlo, an interacting
particle system for endogenous thresholds, and an end-to-end measurement
pipeline, with the closed forms they are verified against.
"""
from .errors import (
    BadStart,
    BadStep,
    BornBranchError,
    ConfigError,
    DegenerateDesign,
    DegenerateSpec,
    DivergentRegime,
    DomainError,
    EmptySample,
    Extinction,
    OutOfRange,
    RareEventRegime,
    StateExplosion,
    TooFewSurvivors,
    TooLarge,
    WrongArity,
    ZeroDenominator,
)
from .model import (
    AlphaResult,
    BranchingSpec,
    DiffusionParams,
    EndogenousAlpha,
    Endogenous,
    Exogenous,
    FiniteSupportShocks,
    GaussianShocks,
    LogUniformShocks,
    RandomBarrier,
    ThresholdSchedule,
    WalkMoments,
    WalkParams,
    alpha_for_unit_beta,
    basic_params,
    endogenous_alpha,
    endogenous_beta,
    min_delta_sufficient_condition,
    non_lattice_check,
)
from .tree import (
    ScanRow,
    TreeResult,
    born_ratio_scan,
    brute_leaf_log_amplitudes,
    count_survivors_dp,
    enumerate_brute,
    log_bigint,
    scan_rows_from_series,
)
from .lcg import (
    DEFAULT_LCG_ALPHA,
    LcgSpec,
    LcgTreeResult,
    LcgWalkResult,
    lcg_children,
    lcg_cycle_length,
    lcg_delta,
    lcg_delta_stream,
    lcg_full_period,
    lcg_next,
    lcg_tree,
    lcg_walk_survival,
)
from .walk import (
    LimitRegime,
    RatioEstimate,
    SurvivalEstimate,
    WalkPathOutcome,
    estimate_survival,
    limit_regime_preset,
    simulate_walk,
    survival_ratio,
)
from .diffusion import (
    ConditionedSample,
    MeanRatioResult,
    RatioPoint,
    batch_survive,
    conditional_mean_ratio,
    conditioned_sample,
    default_dt,
    gamma_median_root,
    log_survival_closed_form,
    ratio_convergence_scan,
    simulate_diffusion,
    survival_asymptotic,
    survival_closed_form,
)
from .population import PopulationRun, PopulationState, endogenous_population
from .measure import (
    MeasurementSetup,
    OutcomeStats,
    PipelineResult,
    measurement_pipeline,
    outcome_weights,
    prepared_median_reference,
)
from .stats import (
    FitResult,
    binomial_count_fraction,
    binomial_interval_logprob,
    binomial_logpmf,
    bootstrap_ci,
    fit_power_law,
    ks_distance,
    quantile,
)
from .rng import BLOCK_SIZE, rng_stream

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
