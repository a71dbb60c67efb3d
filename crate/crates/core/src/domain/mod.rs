//! Domain types and the deterministic transformations between them.

mod assignment;
mod ranking;
mod reviews;

pub use assignment::{generate_assignment, generate_clustered_assignment, ClusteredAssignment, ReviewAssignment};
pub use ranking::{AgentId, Profile, Ranking};
pub use reviews::{
    approval_weight, beliefs_from_predicted_profile, binarize_approvals, ApprovalProfile,
    BeliefProfile, PredictedRankings, Quota,
};
