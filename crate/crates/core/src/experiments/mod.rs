//! Experiment configs, the per-trial simulation pipeline, parameter sweeps
//! and the metrics reported over them.

mod config;
mod mad;
mod metrics;
mod runner;

pub use config::{default_grid, parse_grid, ExperimentConfig, MechanismKind, GRID_SCHEMA};
pub use mad::{mad_stats, MadSummary, ReviewerMad, ScorePrediction};
pub use metrics::{
    anti_recall, lottery_share_by_decile, mean_lottery_share, recall_at_k, recall_by_d_phi, RecallRow,
};
pub use runner::{
    run_sweep, run_sweep_with, run_trial, simulate_trial, CellFailure, ExperimentRecord, SweepOptions,
    SweepOutput, TrialState, WinnerEntry, RECORD_SCHEMA,
};
