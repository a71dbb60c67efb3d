//! The hybrid mechanism: quality winners from PeerNomination, reward winners
//! from the truth-serum lottery, and their union.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{AgentId, ApprovalProfile, BeliefProfile, Profile, Ranking, ReviewAssignment};
use crate::error::{Error, Result};
use crate::mechanisms::{peer_nomination, SelectionResult};
use crate::rbts::{board_orders, rbts_lottery, LotteryOutcome, Quadratic, ScoreTable};
use crate::seed::{self, tag};

/// Which target PeerNomination runs with inside the hybrid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuotaBasis {
    /// Target `k - d`, leaving `d` slots to the lottery.
    #[default]
    KMinusD,
    K,
}

impl QuotaBasis {
    pub fn target(self, k: usize, d: usize) -> usize {
        match self {
            QuotaBasis::KMinusD => k - d,
            QuotaBasis::K => k,
        }
    }
}

impl fmt::Display for QuotaBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QuotaBasis::KMinusD => "k-minus-d",
            QuotaBasis::K => "k",
        })
    }
}

impl FromStr for QuotaBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "k-minus-d" | "k-d" => Ok(QuotaBasis::KMinusD),
            "k" => Ok(QuotaBasis::K),
            _ => Err(Error::param(format!("unknown quota basis {s:?} (k-minus-d, k)"))),
        }
    }
}

/// Why an agent won.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Selected by the quality mechanism only.
    Quality,
    /// Drawn in the reward lottery only.
    Lottery,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeerBtsParams {
    pub k: usize,
    pub d: usize,
    pub epsilon: f64,
    #[serde(default)]
    pub quota_basis: QuotaBasis,
}

impl PeerBtsParams {
    pub fn new(k: usize, d: usize, epsilon: f64) -> Self {
        PeerBtsParams { k, d, epsilon, quota_basis: QuotaBasis::default() }
    }

    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        if self.d >= self.k {
            return Err(Error::param(format!("d must be < k (d = {}, k = {})", self.d, self.k)));
        }
        if self.k >= n {
            return Err(Error::param(format!("k must be < n (k = {}, n = {n})", self.k)));
        }
        if self.d > 0 && m < 3 {
            return Err(Error::BoardTooSmall(m));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::param(format!("epsilon must be positive (got {})", self.epsilon)));
        }
        Ok(())
    }

    pub fn quality_target(&self) -> usize {
        self.quota_basis.target(self.k, self.d)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeerBtsOutcome {
    pub winners: BTreeMap<AgentId, Provenance>,
    pub quality: SelectionResult,
    pub scores: Option<ScoreTable>,
    pub lottery: Option<LotteryOutcome>,
}

impl PeerBtsOutcome {
    pub fn winner_set(&self) -> BTreeSet<AgentId> {
        self.winners.keys().copied().collect()
    }

    pub fn contains(&self, agent: AgentId) -> bool {
        self.winners.contains_key(&agent)
    }
}

/// Truth-serum scores with the board orders the hybrid derives from `seed`.
pub fn score_reports(x: &ApprovalProfile, y: &BeliefProfile, assignment: &ReviewAssignment, seed: u64) -> Result<ScoreTable> {
    let orders = board_orders(assignment, seed::derive(seed, &[tag::BOARD_ORDER]));
    ScoreTable::compute(&orders, x, y, &Quadratic)
}

/// Joins an existing quality selection with the reward lottery. With
/// `d = 0` no lottery runs and the quality winners are returned as-is.
pub fn peerbts_combine(
    quality: SelectionResult,
    x: &ApprovalProfile,
    y: &BeliefProfile,
    assignment: &ReviewAssignment,
    params: &PeerBtsParams,
    seed: u64,
) -> Result<PeerBtsOutcome> {
    params.validate(assignment.n(), assignment.m())?;
    let mut winners: BTreeMap<AgentId, Provenance> = quality.winners.iter().map(|&a| (a, Provenance::Quality)).collect();
    if params.d == 0 {
        return Ok(PeerBtsOutcome { winners, quality, scores: None, lottery: None });
    }
    let scores = score_reports(x, y, assignment, seed)?;
    let lottery = rbts_lottery(&scores, assignment, params.d, params.epsilon, seed::derive(seed, &[tag::MECHANISM]))?;
    for &w in &lottery.winners {
        winners
            .entry(w)
            .and_modify(|p| *p = Provenance::Both)
            .or_insert(Provenance::Lottery);
    }
    Ok(PeerBtsOutcome { winners, quality, scores: Some(scores), lottery: Some(lottery) })
}

/// PeerBTS: PeerNomination on `profile` with the configured target, unioned
/// with `d` lottery draws scored from `x` and `y`.
pub fn peerbts_select(
    profile: &Profile,
    x: &ApprovalProfile,
    y: &BeliefProfile,
    assignment: &ReviewAssignment,
    params: &PeerBtsParams,
    seed: u64,
) -> Result<PeerBtsOutcome> {
    params.validate(assignment.n(), assignment.m())?;
    let quality = peer_nomination(profile, assignment, params.quality_target())?;
    peerbts_combine(quality, x, y, assignment, params, seed)
}

/// The naive exact combiner: top `k - d` of the quality ranking, then the
/// top `d` of the reward ranking among those not yet chosen. It is not
/// incentive compatible and exists to exhibit that.
pub fn naive_topup_select(f_ranking: &Ranking, h_ranking: &Ranking, k: usize, d: usize) -> Result<BTreeSet<AgentId>> {
    let mut a: Vec<AgentId> = f_ranking.iter().collect();
    let mut b: Vec<AgentId> = h_ranking.iter().collect();
    a.sort();
    b.sort();
    if a != b {
        return Err(Error::InvalidRanking("both rankings must cover the same agents".into()));
    }
    if d > k || k > f_ranking.len() {
        return Err(Error::param(format!("need d <= k <= n (d = {d}, k = {k}, n = {})", f_ranking.len())));
    }
    let mut chosen: BTreeSet<AgentId> = f_ranking.iter().take(k - d).collect();
    for agent in h_ranking.iter() {
        if chosen.len() == k {
            break;
        }
        chosen.insert(agent);
    }
    Ok(chosen)
}
