//! Strategyproof selection mechanisms.
//!
//! Both mechanisms here decide an agent's fate only from other agents'
//! reports: PeerNomination scores proposal `i` from its board, which never
//! contains `i`, and Partition scores each cluster from reviewers outside it.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::domain::{binarize_approvals, AgentId, ApprovalProfile, ClusteredAssignment, Profile, ReviewAssignment};
use crate::error::{Error, Result};

/// Output of a selection mechanism.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub winners: BTreeSet<AgentId>,
    /// Nomination points per agent, indexed by `AgentId::index`.
    pub points: Vec<f64>,
    /// Number of winners the mechanism aimed for.
    pub target: usize,
}

impl SelectionResult {
    pub fn contains(&self, agent: AgentId) -> bool {
        self.winners.contains(&agent)
    }

    pub fn points_of(&self, agent: AgentId) -> f64 {
        self.points[agent.index()]
    }
}

/// A deterministic mechanism from a profile (plus a seed for any internal
/// randomness) to a selected set.
pub trait SelectionMechanism {
    fn select(&self, profile: &Profile, seed: u64) -> Result<SelectionResult>;
}

/// PeerNomination with target `k`. Each reviewer gives one point to its top
/// `floor(k m / n)` proposals and the fractional remainder to the next one;
/// a proposal wins with at least `m / 2` points.
///
/// Points are kept in exact units of `1/n`, so the `m / 2` comparison has
/// no rounding error.
pub fn peer_nomination(profile: &Profile, assignment: &ReviewAssignment, k: usize) -> Result<SelectionResult> {
    let (n, m) = (assignment.n(), assignment.m());
    if k == 0 || k >= n {
        return Err(Error::param(format!("PeerNomination needs 0 < k < n (k = {k}, n = {n})")));
    }
    if profile.n() != n {
        return Err(Error::InvalidProfile(format!("profile has {} agents, assignment {n}", profile.n())));
    }
    let full = k * m / n;
    let rem = (k * m % n) as u64;
    let mut units = vec![0u64; n];
    for reviewer in assignment.agents() {
        let bundle = assignment.reviews_of(reviewer);
        let ranking = profile.ranking(reviewer);
        for &proposal in bundle {
            let rank = ranking
                .rank_within(proposal, bundle)
                .ok_or(Error::MissingRanking { reviewer, proposal })?;
            if rank <= full {
                units[proposal.index()] += n as u64;
            } else if rank == full + 1 {
                units[proposal.index()] += rem;
            }
        }
    }
    let threshold = (m * n) as u64;
    let winners = assignment.agents().filter(|a| 2 * units[a.index()] >= threshold).collect();
    let points = units.iter().map(|&u| u as f64 / n as f64).collect();
    Ok(SelectionResult { winners, points, target: k })
}

/// PeerNomination on explicit binary approvals: each approval is one point
/// and a proposal wins with at least `m / 2` approvals.
pub fn peer_nomination_from_approvals(
    approvals: &ApprovalProfile,
    assignment: &ReviewAssignment,
    k: usize,
) -> Result<SelectionResult> {
    let m = assignment.m();
    let mut points = vec![0.0; assignment.n()];
    let mut winners = BTreeSet::new();
    for p in assignment.agents() {
        let count = approvals.board(p).iter().filter(|(_, v)| *v).count();
        points[p.index()] = count as f64;
        if 2 * count >= m {
            winners.insert(p);
        }
    }
    Ok(SelectionResult { winners, points, target: k })
}

/// Winner slots per cluster: `k / clusters` each, remainder handed out
/// one at a time from cluster 0 upward.
pub fn cluster_slots(k: usize, clusters: usize) -> Vec<usize> {
    (0..clusters).map(|c| k / clusters + usize::from(c < k % clusters)).collect()
}

/// Partition: approvals under quota `k m / n`, then each cluster takes its
/// slots from its own members by external approval count, lowest id first
/// on ties.
pub fn partition_select(profile: &Profile, clustered: &ClusteredAssignment, k: usize, seed: u64) -> Result<SelectionResult> {
    let assignment = &clustered.assignment;
    let n = assignment.n();
    if k == 0 || k >= n {
        return Err(Error::param(format!("Partition needs 0 < k < n (k = {k}, n = {n})")));
    }
    let quota = k as f64 * assignment.m() as f64 / n as f64;
    let x = binarize_approvals(profile, assignment, quota, seed)?;
    let points: Vec<f64> = assignment
        .agents()
        .map(|p| x.board(p).iter().filter(|(_, v)| *v).count() as f64)
        .collect();
    let mut winners = BTreeSet::new();
    for (c, slots) in cluster_slots(k, clustered.clusters()).into_iter().enumerate() {
        let mut members: Vec<AgentId> = clustered.members(c).collect();
        members.sort_by(|a, b| points[b.index()].total_cmp(&points[a.index()]).then(a.cmp(b)));
        winners.extend(members.into_iter().take(slots));
    }
    Ok(SelectionResult { winners, points, target: k })
}

#[derive(Clone, Debug)]
pub struct PeerNominationMechanism {
    pub assignment: ReviewAssignment,
    pub k: usize,
}

impl SelectionMechanism for PeerNominationMechanism {
    fn select(&self, profile: &Profile, _seed: u64) -> Result<SelectionResult> {
        peer_nomination(profile, &self.assignment, self.k)
    }
}

#[derive(Clone, Debug)]
pub struct PartitionMechanism {
    pub clustered: ClusteredAssignment,
    pub k: usize,
}

impl SelectionMechanism for PartitionMechanism {
    fn select(&self, profile: &Profile, seed: u64) -> Result<SelectionResult> {
        partition_select(profile, &self.clustered, self.k, seed)
    }
}
