use std::collections::BTreeSet;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, MechanismKind};
use super::metrics::{anti_recall, mean_lottery_share, recall_at_k};
use crate::domain::{
    beliefs_from_predicted_profile, binarize_approvals, generate_assignment, generate_clustered_assignment, AgentId,
    ApprovalProfile, BeliefProfile, ClusteredAssignment, Profile, ReviewAssignment,
};
use crate::error::{Error, Result};
use crate::mechanisms::partition_select;
use crate::peerbts::{peerbts_select, score_reports, PeerBtsParams, Provenance};
use crate::rbts::{sub_lotteries, threshold_filter};
use crate::sampling::{generate_ground_profiles, generate_predictions_for, PredictedProfiles};
use crate::seed::{self, tag};

pub const RECORD_SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinnerEntry {
    pub agent: AgentId,
    pub provenance: Provenance,
}

/// One trial of one cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub schema: u32,
    pub config: ExperimentConfig,
    pub trial: usize,
    pub seed: u64,
    pub winners: Vec<WinnerEntry>,
    /// Size of the quality mechanism's own selection.
    pub quality_selected: usize,
    pub recall: f64,
    pub anti_recall: f64,
    /// `ℓ̄_i` indexed by agent id minus one.
    pub mean_lottery_share: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flagged: Vec<AgentId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl ExperimentRecord {
    pub fn winner_set(&self) -> BTreeSet<AgentId> {
        self.winners.iter().map(|w| w.agent).collect()
    }
}

/// Everything a trial samples before any mechanism runs.
#[derive(Clone, Debug)]
pub struct TrialState {
    pub assignment: ReviewAssignment,
    pub clustered: Option<ClusteredAssignment>,
    pub profile: Profile,
    pub predictions: PredictedProfiles,
    pub quota: f64,
    pub x: ApprovalProfile,
    pub y: BeliefProfile,
}

/// Samples assignment, ground-truth profile, predictions, approvals and
/// beliefs for one trial. Approvals and beliefs use quota `k m / n`.
pub fn simulate_trial(config: &ExperimentConfig, trial_seed: u64) -> Result<TrialState> {
    config.validate()?;
    let assignment_seed = seed::derive(trial_seed, &[tag::ASSIGNMENT]);
    let (assignment, clustered) = match config.mechanism {
        MechanismKind::PeerBts => (generate_assignment(config.n, config.m, assignment_seed)?, None),
        MechanismKind::PartitionThreshold { clusters } => {
            let c = generate_clustered_assignment(config.n, config.m, clusters, assignment_seed)?;
            (c.assignment.clone(), Some(c))
        }
    };
    let profile = generate_ground_profiles(config.n, config.phi, trial_seed)?;
    let predictions = generate_predictions_for(config.model, &profile, &assignment, trial_seed);
    let quota = config.k as f64 * config.m as f64 / config.n as f64;
    let x = binarize_approvals(&profile, &assignment, quota, trial_seed)?;
    let y = beliefs_from_predicted_profile(&predictions, &assignment, quota)?;
    Ok(TrialState { assignment, clustered, profile, predictions, quota, x, y })
}

/// Runs trial `trial` of `config`.
pub fn run_trial(config: &ExperimentConfig, trial: usize) -> Result<ExperimentRecord> {
    let trial_seed = config.trial_seed(trial);
    let state = simulate_trial(config, trial_seed)?;
    let mechanism_seed = seed::derive(trial_seed, &[tag::MECHANISM]);
    let scores = if config.m >= 3 {
        Some(score_reports(&state.x, &state.y, &state.assignment, mechanism_seed)?)
    } else {
        None
    };
    let shares = match &scores {
        Some(s) => mean_lottery_share(&sub_lotteries(s, config.epsilon), &state.assignment),
        None => vec![0.0; config.n],
    };
    let (winners, quality_selected, flagged) = match config.mechanism {
        MechanismKind::PeerBts => {
            let params = PeerBtsParams {
                k: config.k,
                d: config.d,
                epsilon: config.epsilon,
                quota_basis: config.quota_basis,
            };
            let out = peerbts_select(&state.profile, &state.x, &state.y, &state.assignment, &params, mechanism_seed)?;
            let winners: Vec<WinnerEntry> =
                out.winners.iter().map(|(&agent, &provenance)| WinnerEntry { agent, provenance }).collect();
            (winners, out.quality.winners.len(), Vec::new())
        }
        MechanismKind::PartitionThreshold { .. } => {
            let clustered = state.clustered.as_ref().expect("clustered assignment");
            let selection = partition_select(&state.profile, clustered, config.k, trial_seed)?;
            let filtered = threshold_filter(&selection, scores.as_ref().expect("m >= 3 checked by validate"));
            let winners = filtered
                .selection
                .winners
                .iter()
                .map(|&agent| WinnerEntry { agent, provenance: Provenance::Quality })
                .collect();
            (winners, selection.winners.len(), filtered.flagged)
        }
    };
    let set: BTreeSet<AgentId> = winners.iter().map(|w| w.agent).collect();
    Ok(ExperimentRecord {
        schema: RECORD_SCHEMA,
        config: config.clone(),
        trial,
        seed: trial_seed,
        winners,
        quality_selected,
        recall: recall_at_k(&set, config.k),
        anti_recall: anti_recall(&set, config.k),
        mean_lottery_share: shares,
        flagged,
        wall_time_ms: None,
    })
}

#[derive(Clone, Debug, Default)]
pub struct SweepOptions {
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
    /// Stamp each record with its wall time. Off by default so output bytes
    /// depend only on the seed.
    pub record_timing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub cell: usize,
    pub config: ExperimentConfig,
    pub error: String,
}

#[derive(Clone, Debug, Default)]
pub struct SweepOutput {
    pub records: Vec<ExperimentRecord>,
    pub failures: Vec<CellFailure>,
}

fn run_cell(config: &ExperimentConfig, timing: bool) -> Result<Vec<ExperimentRecord>> {
    config.validate()?;
    (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let start = Instant::now();
            let mut r = run_trial(config, t)?;
            if timing {
                r.wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
            }
            Ok(r)
        })
        .collect()
}

/// Runs every cell, handing records to `sink` in cell order and trial order
/// whatever the thread count. A failing cell is reported and skipped.
pub fn run_sweep_with<F>(cells: &[ExperimentConfig], options: &SweepOptions, mut sink: F) -> Result<Vec<CellFailure>>
where
    F: FnMut(&ExperimentRecord) -> Result<()>,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = options.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::param(format!("thread pool: {e}")))?;
    let mut failures = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        match pool.install(|| run_cell(cell, options.record_timing)) {
            Ok(records) => {
                for r in &records {
                    sink(r)?;
                }
            }
            Err(e) => failures.push(CellFailure { cell: i, config: cell.clone(), error: e.to_string() }),
        }
    }
    Ok(failures)
}

pub fn run_sweep(cells: &[ExperimentConfig], options: &SweepOptions) -> Result<SweepOutput> {
    let mut records = Vec::new();
    let failures = run_sweep_with(cells, options, |r| {
        records.push(r.clone());
        Ok(())
    })?;
    Ok(SweepOutput { records, failures })
}
