//! Robust Bayesian Truth Serum scoring and the reward lottery built on it.
//!
//! For proposal `i` the board is put in a fixed order. The reviewer at
//! position `j` is compared with a reference at `j + 1` and a peer at
//! `j + 2` (mod m). The reference's prediction is shifted towards the
//! reviewer's own binary report by `δ = min(y_ref, 1 - y_ref)`, giving the
//! shadow report; the score is the rule applied to the shadow report plus
//! the rule applied to the reviewer's own prediction, both against the
//! peer's report.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{AgentId, ApprovalProfile, BeliefProfile, ReviewAssignment};
use crate::error::{Error, Result};
use crate::mechanisms::SelectionResult;
use crate::seed::{self, tag};

/// A scoring rule for binary outcomes with values in `[0, 1]`.
pub trait ScoringRule: Send + Sync {
    fn score(&self, p: f64, outcome: bool) -> f64;
}

/// The binary quadratic rule `1 - (p - ω)²`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Quadratic;

impl ScoringRule for Quadratic {
    fn score(&self, p: f64, outcome: bool) -> f64 {
        let o = if outcome { 1.0 } else { 0.0 };
        1.0 - (p - o) * (p - o)
    }
}

pub fn quadratic_score(p: f64, outcome: bool) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    Ok(Quadratic.score(p, outcome))
}

/// The order of one proposal's board used for reference/peer indexing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoardOrder {
    pub proposal: AgentId,
    reviewers: Vec<AgentId>,
}

impl BoardOrder {
    pub fn new(proposal: AgentId, reviewers: Vec<AgentId>, assignment: &ReviewAssignment) -> Result<Self> {
        let mut sorted = reviewers.clone();
        sorted.sort();
        if sorted != assignment.board_of(proposal) {
            return Err(Error::param(format!("board order for {proposal} is not a permutation of its board")));
        }
        Ok(BoardOrder { proposal, reviewers })
    }

    pub fn reviewers(&self) -> &[AgentId] {
        &self.reviewers
    }
}

/// One seeded random order per proposal.
pub fn board_orders(assignment: &ReviewAssignment, seed: u64) -> Vec<BoardOrder> {
    assignment
        .agents()
        .map(|p| {
            let mut reviewers = assignment.board_of(p).to_vec();
            reviewers.shuffle(&mut seed::substream(seed, &[tag::BOARD_ORDER, p.0 as u64]));
            BoardOrder { proposal: p, reviewers }
        })
        .collect()
}

/// Truth-serum scores for one proposal's board, in board order.
pub fn rbts_scores(
    order: &BoardOrder,
    x: &ApprovalProfile,
    y: &BeliefProfile,
    rule: &dyn ScoringRule,
) -> Result<Vec<(AgentId, f64)>> {
    let m = order.reviewers.len();
    if m < 3 {
        return Err(Error::BoardTooSmall(m));
    }
    let i = order.proposal;
    let reports = order
        .reviewers
        .iter()
        .map(|&r| Ok((x.approved(i, r)?, y.belief(i, r)?)))
        .collect::<Result<Vec<(bool, f64)>>>()?;
    let scores = (0..m)
        .map(|j| {
            let (own_report, own_prediction) = reports[j];
            let reference_prediction = reports[(j + 1) % m].1;
            let peer_report = reports[(j + 2) % m].0;
            let delta = reference_prediction.min(1.0 - reference_prediction);
            let shadow = if own_report {
                reference_prediction + delta
            } else {
                reference_prediction - delta
            };
            let score = rule.score(shadow, peer_report) + rule.score(own_prediction, peer_report);
            (order.reviewers[j], score.clamp(0.0, 2.0))
        })
        .collect();
    Ok(scores)
}

/// Truth-serum scores for every proposal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    boards: Vec<Vec<(AgentId, f64)>>,
}

impl ScoreTable {
    /// Builds a table from per-proposal score lists (index = proposal).
    pub fn new(boards: Vec<Vec<(AgentId, f64)>>) -> Result<Self> {
        for b in &boards {
            if let Some(&(_, s)) = b.iter().find(|(_, s)| !(0.0..=2.0).contains(s)) {
                return Err(Error::param(format!("score {s} outside [0, 2]")));
            }
        }
        Ok(ScoreTable { boards })
    }

    pub fn compute(
        orders: &[BoardOrder],
        x: &ApprovalProfile,
        y: &BeliefProfile,
        rule: &dyn ScoringRule,
    ) -> Result<Self> {
        let boards = orders.iter().map(|o| rbts_scores(o, x, y, rule)).collect::<Result<_>>()?;
        Ok(ScoreTable { boards })
    }

    pub fn n(&self) -> usize {
        self.boards.len()
    }

    pub fn board(&self, proposal: AgentId) -> &[(AgentId, f64)] {
        &self.boards[proposal.index()]
    }

    pub fn score(&self, proposal: AgentId, reviewer: AgentId) -> Option<f64> {
        self.board(proposal).iter().find(|(r, _)| *r == reviewer).map(|&(_, s)| s)
    }

    /// Each agent's mean score over the boards it sits on; `None` for agents
    /// that reviewed nothing.
    pub fn reviewer_averages(&self) -> Vec<Option<f64>> {
        let mut sum = vec![0.0; self.n()];
        let mut count = vec![0usize; self.n()];
        for b in &self.boards {
            for &(r, s) in b {
                if r.index() < sum.len() {
                    sum[r.index()] += s;
                    count[r.index()] += 1;
                }
            }
        }
        sum.into_iter().zip(count).map(|(s, c)| (c > 0).then(|| s / c as f64)).collect()
    }
}

/// Win distribution of one proposal's lottery over its board plus NULL.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubLottery {
    pub proposal: AgentId,
    pub shares: Vec<(AgentId, f64)>,
    pub null: f64,
}

impl SubLottery {
    /// Shares are `(score / 2)^ε / m`; NULL takes the rest.
    pub fn new(proposal: AgentId, scores: &[(AgentId, f64)], epsilon: f64) -> Self {
        let m = scores.len() as f64;
        let shares: Vec<(AgentId, f64)> = scores.iter().map(|&(r, s)| (r, (s / 2.0).powf(epsilon) / m)).collect();
        let total: f64 = shares.iter().map(|(_, p)| p).sum();
        SubLottery { proposal, shares, null: (1.0 - total).max(0.0) }
    }

    pub fn share_of(&self, agent: AgentId) -> f64 {
        self.shares.iter().find(|(r, _)| *r == agent).map_or(0.0, |&(_, p)| p)
    }

    /// Inverse-CDF draw from a uniform `u` in `[0, 1)`.
    pub fn draw(&self, u: f64) -> Option<AgentId> {
        let mut acc = 0.0;
        for &(r, p) in &self.shares {
            acc += p;
            if u < acc {
                return Some(r);
            }
        }
        None
    }
}

pub fn sub_lotteries(scores: &ScoreTable, epsilon: f64) -> Vec<SubLottery> {
    AgentId::all(scores.n()).map(|p| SubLottery::new(p, scores.board(p), epsilon)).collect()
}

/// Everything the reward lottery produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LotteryOutcome {
    pub sub_lotteries: Vec<SubLottery>,
    /// One entry per proposal's sub-lottery; `None` is the NULL outcome.
    pub bag: Vec<Option<AgentId>>,
    /// Bag positions drawn.
    pub drawn: Vec<usize>,
    pub winners: BTreeSet<AgentId>,
}

/// Draws each sub-lottery once into the bag, then `d` bag entries uniformly
/// without replacement. NULL draws and repeated agents add no winner.
pub fn rbts_lottery(scores: &ScoreTable, assignment: &ReviewAssignment, d: usize, epsilon: f64, seed: u64) -> Result<LotteryOutcome> {
    let n = assignment.n();
    if d < 1 || d > n {
        return Err(Error::param(format!("lottery draws d = {d} outside 1..={n}")));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::param(format!("weighting exponent {epsilon} must be positive")));
    }
    if scores.n() != n {
        return Err(Error::param("score table does not match the assignment"));
    }
    let sub_lotteries = sub_lotteries(scores, epsilon);
    let bag: Vec<Option<AgentId>> = sub_lotteries
        .iter()
        .map(|l| l.draw(seed::substream(seed, &[tag::SUB_LOTTERY, l.proposal.0 as u64]).random()))
        .collect();
    let mut rng = seed::substream(seed, &[tag::BAG_DRAW]);
    let drawn: Vec<usize> = rand::seq::index::sample(&mut rng, n, d).into_vec();
    let winners = drawn.iter().filter_map(|&i| bag[i]).collect();
    Ok(LotteryOutcome { sub_lotteries, bag, drawn, winners })
}

/// Exact probability that `agent` is among the lottery winners, over both
/// the sub-lottery draws and the bag draw. The agent's bag count is a sum
/// of independent Bernoullis (one per board it sits on); given `c` entries
/// out of `n`, `d` draws miss all of them with probability
/// `C(n - c, d) / C(n, d)`.
pub fn selection_probability(agent: AgentId, sub_lotteries: &[SubLottery], d: usize) -> f64 {
    let n = sub_lotteries.len();
    let mut count_dist = vec![1.0];
    for l in sub_lotteries {
        let p = l.share_of(agent);
        if p > 0.0 {
            let mut next = vec![0.0; count_dist.len() + 1];
            for (c, &w) in count_dist.iter().enumerate() {
                next[c] += w * (1.0 - p);
                next[c + 1] += w * p;
            }
            count_dist = next;
        }
    }
    count_dist
        .iter()
        .enumerate()
        .map(|(c, &w)| {
            // C(n - c, d) / C(n, d) = prod_{t=0}^{d-1} (n - c - t) / (n - t)
            let miss: f64 = (0..d)
                .map(|t| if n < c + t { 0.0 } else { (n - c - t) as f64 / (n - t) as f64 })
                .product();
            w * (1.0 - miss)
        })
        .sum()
}

/// Result of the deterministic threshold filter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterOutcome {
    pub selection: SelectionResult,
    pub threshold: f64,
    pub removed: Vec<AgentId>,
    /// Winners kept only because they have no score record.
    pub flagged: Vec<AgentId>,
}

/// Removes winners whose mean truth-serum score falls below the population
/// mean of per-agent means.
pub fn threshold_filter(selection: &SelectionResult, scores: &ScoreTable) -> FilterOutcome {
    let averages = scores.reviewer_averages();
    let defined: Vec<f64> = averages.iter().flatten().copied().collect();
    let threshold = if defined.is_empty() { 0.0 } else { defined.iter().sum::<f64>() / defined.len() as f64 };
    let mut kept = selection.clone();
    let mut removed = Vec::new();
    let mut flagged = Vec::new();
    for &w in &selection.winners {
        match averages.get(w.index()).copied().flatten() {
            Some(avg) if avg < threshold => {
                kept.winners.remove(&w);
                removed.push(w);
            }
            Some(_) => {}
            None => flagged.push(w),
        }
    }
    FilterOutcome { selection: kept, threshold, removed, flagged }
}
