"""Weighted l1-minimization recovery benchmarks for block-structured wideband spectrum sensing.

The package models a wideband whose contiguous blocks have heterogeneous
occupancy statistics, senses it through sub-Nyquist random projections,
recovers the spectrum with block-weighted l1 minimization (plus plain l1,
OMP, and CoSaMP baselines), evaluates analytical recovery guarantees, scores
occupancy decisions by energy detection, and reproduces all of it through a
seeded Monte-Carlo harness with deterministic outputs.
"""

from .bounds import (
    MeasurementBound,
    RipProfile,
    StabilityConstants,
    min_measurements,
    min_measurements_report,
    stability_constants,
    swap_probability,
    theorem1_success_probability,
)
from .config import ConfigError, ExperimentConfig, parse_config, parse_config_text
from .detection import DetectionReport, decide_and_score, detection_threshold, gaussian_tail_quantile
from .harness import (
    SweepRecord,
    config_hash,
    greedy_sparsity,
    run_epg_sweep,
    run_figure,
    run_mse_sweep,
    run_roc,
    run_sparsity_figure,
    trial_rngs,
    write_records,
)
from .sensing import (
    MeasurementSet,
    SensingSystem,
    acquire_measurements,
    generate_sensing_matrix,
    received_snr_db,
    residual_budget,
    sensing_snr_db,
)
from .solvers import (
    RecoveryResult,
    SolverOptions,
    WeightVector,
    compute_weights,
    cosamp,
    omp,
    solve_l1,
    solve_weighted_l1,
)
from .spectrum import (
    BlockSpec,
    ChernoffBound,
    OccupancyPmf,
    SpectrumInstance,
    chernoff_tail_bound,
    make_block_spec,
    occupancy_pmf,
    sample_occupancy,
    select_sparsity_level,
)

__version__ = "0.1.0"

__all__ = [
    "BlockSpec",
    "ChernoffBound",
    "ConfigError",
    "DetectionReport",
    "ExperimentConfig",
    "MeasurementBound",
    "MeasurementSet",
    "OccupancyPmf",
    "RecoveryResult",
    "RipProfile",
    "SensingSystem",
    "SolverOptions",
    "SpectrumInstance",
    "StabilityConstants",
    "SweepRecord",
    "WeightVector",
    "acquire_measurements",
    "chernoff_tail_bound",
    "compute_weights",
    "config_hash",
    "cosamp",
    "decide_and_score",
    "detection_threshold",
    "gaussian_tail_quantile",
    "generate_sensing_matrix",
    "greedy_sparsity",
    "make_block_spec",
    "min_measurements",
    "min_measurements_report",
    "occupancy_pmf",
    "omp",
    "parse_config",
    "parse_config_text",
    "received_snr_db",
    "residual_budget",
    "run_epg_sweep",
    "run_figure",
    "run_mse_sweep",
    "run_roc",
    "run_sparsity_figure",
    "sample_occupancy",
    "select_sparsity_level",
    "sensing_snr_db",
    "solve_l1",
    "solve_weighted_l1",
    "stability_constants",
    "swap_probability",
    "theorem1_success_probability",
    "trial_rngs",
    "write_records",
]
