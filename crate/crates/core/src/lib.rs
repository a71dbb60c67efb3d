//! Peer selection with an effort-rewarding lottery.
//!
//! The crate combines a strategyproof quality selection (PeerNomination, or
//! the Partition baseline) with a Robust Bayesian Truth Serum reward lottery
//! over binary reviews and approval-rate predictions. Around the mechanisms
//! sit a Mallows-model simulator, an experiment runner for parameter sweeps,
//! and audit harnesses that check the incentive properties empirically.
//!
//! Module map:
//! * [`domain`]: agents, rankings, review assignments, approvals and beliefs.
//! * [`mechanisms`]: PeerNomination and Partition.
//! * [`rbts`]: truth-serum scoring, sub-lotteries, the bag draw and the
//!   threshold filter.
//! * [`peerbts`]: the hybrid mechanism and the naive top-up combiner.
//! * [`sampling`]: Mallows profiles and prediction models.
//! * [`experiments`]: metrics, configs, sweeps and result files.
//! * [`deviation`]: incentive audits.

pub mod deviation;
pub mod domain;
pub mod error;
pub mod experiments;
pub mod io;
pub mod mechanisms;
pub mod peerbts;
pub mod rbts;
pub mod sampling;
pub mod seed;

pub use domain::{
    AgentId, ApprovalProfile, BeliefProfile, ClusteredAssignment, Profile, Ranking,
    ReviewAssignment,
};
pub use error::{Error, Result};
