use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AgentId, Profile, Ranking, ReviewAssignment};
use crate::error::{Error, Result};
use crate::seed::{self, tag};

/// Rank threshold turning a ranking into approvals. A fractional quota
/// approves the boundary rank `floor + 1` with probability `fraction`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Quota(f64);

impl Quota {
    pub fn new(q: f64, m: usize) -> Result<Self> {
        if !(q > 0.0 && q < m as f64) {
            return Err(Error::QuotaOutOfRange { quota: q, m });
        }
        Ok(Quota(q))
    }

    /// The nomination share `target * m / n`.
    pub fn share(target: usize, m: usize, n: usize) -> Result<Self> {
        Quota::new(target as f64 * m as f64 / n as f64, m)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn floor(self) -> usize {
        self.0.floor() as usize
    }

    pub fn fraction(self) -> f64 {
        self.0 - self.0.floor()
    }
}

/// Approval weight of a proposal at 1-based `rank`: 1 inside the quota, the
/// fractional part at the boundary rank, 0 below.
pub fn approval_weight(rank: usize, quota: Quota) -> f64 {
    let floor = quota.floor();
    if rank <= floor {
        1.0
    } else if rank == floor + 1 {
        quota.fraction()
    } else {
        0.0
    }
}

/// Per-proposal entries in board order.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct ReviewTable<T> {
    boards: Vec<Vec<(AgentId, T)>>,
}

impl<T: Copy> ReviewTable<T> {
    fn build(assignment: &ReviewAssignment, mut f: impl FnMut(AgentId, AgentId) -> Result<T>) -> Result<Self> {
        let boards = assignment
            .agents()
            .map(|p| assignment.board_of(p).iter().map(|&r| Ok((r, f(p, r)?))).collect())
            .collect::<Result<_>>()?;
        Ok(ReviewTable { boards })
    }

    fn get(&self, proposal: AgentId, reviewer: AgentId) -> Option<T> {
        self.boards
            .get(proposal.index())?
            .iter()
            .find(|(r, _)| *r == reviewer)
            .map(|&(_, v)| v)
    }

    fn set(&mut self, proposal: AgentId, reviewer: AgentId, value: T) -> Result<()> {
        let slot = self
            .boards
            .get_mut(proposal.index())
            .and_then(|b| b.iter_mut().find(|(r, _)| *r == reviewer))
            .ok_or(Error::MissingReview { proposal, reviewer })?;
        slot.1 = value;
        Ok(())
    }
}

/// Binary reviews `x(i, j)` for every proposal `i` and reviewer `j` on its board.
#[derive(Clone, Debug, PartialEq)]
pub struct ApprovalProfile {
    quota: Option<Quota>,
    table: ReviewTable<bool>,
}

impl ApprovalProfile {
    /// Builds approvals from a callback `(proposal, reviewer) -> approved`.
    pub fn from_fn(
        assignment: &ReviewAssignment,
        quota: Option<Quota>,
        f: impl FnMut(AgentId, AgentId) -> Result<bool>,
    ) -> Result<Self> {
        Ok(ApprovalProfile { quota, table: ReviewTable::build(assignment, f)? })
    }

    /// The quota the approvals were derived with, if any.
    pub fn quota(&self) -> Option<Quota> {
        self.quota
    }

    pub fn get(&self, proposal: AgentId, reviewer: AgentId) -> Option<bool> {
        self.table.get(proposal, reviewer)
    }

    pub fn approved(&self, proposal: AgentId, reviewer: AgentId) -> Result<bool> {
        self.get(proposal, reviewer).ok_or(Error::MissingReview { proposal, reviewer })
    }

    pub fn set(&mut self, proposal: AgentId, reviewer: AgentId, value: bool) -> Result<()> {
        self.table.set(proposal, reviewer, value)
    }

    /// Entries for one proposal, in board order.
    pub fn board(&self, proposal: AgentId) -> &[(AgentId, bool)] {
        &self.table.boards[proposal.index()]
    }
}

/// Approval-rate predictions `y(i, j)`: reviewer `j`'s predicted fraction
/// of proposal `i`'s board that approves it.
#[derive(Clone, Debug, PartialEq)]
pub struct BeliefProfile {
    table: ReviewTable<f64>,
}

impl BeliefProfile {
    pub fn from_fn(
        assignment: &ReviewAssignment,
        mut f: impl FnMut(AgentId, AgentId) -> Result<f64>,
    ) -> Result<Self> {
        let table = ReviewTable::build(assignment, |p, r| {
            let y = f(p, r)?;
            if !(0.0..=1.0).contains(&y) {
                return Err(Error::ProbabilityOutOfRange(y));
            }
            Ok(y)
        })?;
        Ok(BeliefProfile { table })
    }

    pub fn get(&self, proposal: AgentId, reviewer: AgentId) -> Option<f64> {
        self.table.get(proposal, reviewer)
    }

    pub fn belief(&self, proposal: AgentId, reviewer: AgentId) -> Result<f64> {
        self.get(proposal, reviewer).ok_or(Error::MissingReview { proposal, reviewer })
    }

    pub fn set(&mut self, proposal: AgentId, reviewer: AgentId, value: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::ProbabilityOutOfRange(value));
        }
        self.table.set(proposal, reviewer, value)
    }

    pub fn board(&self, proposal: AgentId) -> &[(AgentId, f64)] {
        &self.table.boards[proposal.index()]
    }
}

/// Turns rankings into approvals under `quota`. Each reviewer draws one
/// uniform from its own substream; the boundary proposal is approved when
/// that draw falls below the quota's fractional part.
pub fn binarize_approvals(
    profile: &Profile,
    assignment: &ReviewAssignment,
    quota: f64,
    seed: u64,
) -> Result<ApprovalProfile> {
    let quota = Quota::new(quota, assignment.m())?;
    let coins: Vec<f64> = assignment
        .agents()
        .map(|r| seed::substream(seed, &[tag::APPROVAL, r.0 as u64]).random::<f64>())
        .collect();
    ApprovalProfile::from_fn(assignment, Some(quota), |proposal, reviewer| {
        let rank = profile
            .ranking(reviewer)
            .rank_within(proposal, assignment.reviews_of(reviewer))
            .ok_or(Error::MissingRanking { reviewer, proposal })?;
        Ok(rank <= quota.floor() || (rank == quota.floor() + 1 && coins[reviewer.index()] < quota.fraction()))
    })
}

/// Source of agent `predictor`'s predicted ranking for `reviewer`.
pub trait PredictedRankings {
    fn predicted(&self, predictor: AgentId, reviewer: AgentId) -> Option<&Ranking>;
}

/// A realized profile read as everyone's prediction (perfect foresight).
impl PredictedRankings for Profile {
    fn predicted(&self, _predictor: AgentId, reviewer: AgentId) -> Option<&Ranking> {
        self.rankings().get(reviewer.index())
    }
}

/// Computes each reviewer's belief as the expected board approval fraction
/// under the reviewer's predicted rankings, with `quota` weighting
/// (fractional boundary approvals contribute their probability).
pub fn beliefs_from_predicted_profile<P: PredictedRankings + ?Sized>(
    predicted: &P,
    assignment: &ReviewAssignment,
    quota: f64,
) -> Result<BeliefProfile> {
    let quota = Quota::new(quota, assignment.m())?;
    let m = assignment.m() as f64;
    BeliefProfile::from_fn(assignment, |proposal, predictor| {
        let mut total = 0.0;
        for &s in assignment.board_of(proposal) {
            let ranking = predicted
                .predicted(predictor, s)
                .ok_or(Error::MissingPrediction { predictor, reviewer: s })?;
            let rank = ranking
                .rank_within(proposal, assignment.reviews_of(s))
                .ok_or(Error::MissingPrediction { predictor, reviewer: s })?;
            total += approval_weight(rank, quota);
        }
        Ok((total / m).clamp(0.0, 1.0))
    })
}
