"""Finite-shot quantum reservoir computing with shot-record organization protocols."""

from .features import FeatureParams, FeatureTensor, build_features, leaky_update
from .protocol import (
    BudgetSpec,
    RunConfig,
    RunResult,
    budget_timesteps,
    chronological_split,
    evaluate_method,
    prepare_run,
    rho_ev,
    run_pipeline,
    run_protocols,
    select_group_size,
)
from .quantum import Entangler, ReservoirParams, ShotRecord, apply_circuit, build_reservoir, run_sequence, sample_bitstrings
from .readout import noise_aware_fit, nrmse, ridge_fit
from .shotorg import GroupingPlan, Organization, internal_divisors, organize, rho_k, warm_start_k
from .stats import PairedSample, SummaryStats, paired_gap_stats, wilcoxon_signed_rank
from .timeseries import SeriesSpec, Task, TimeSeries, generate

__version__ = "0.1.0"
