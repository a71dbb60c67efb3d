use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{approval_weight, AgentId, ApprovalProfile, BeliefProfile, Quota, ReviewAssignment};
use crate::error::{Error, Result};
use crate::seed::{self, tag};

/// How one agent turns its true signal into reports.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum DeviationStrategy {
    Honest,
    ConstantApprove,
    ConstantReject,
    /// Approve each proposal independently with probability `p`.
    Coin(f64),
    /// Approvals from a uniformly random ranking of the bundle.
    RankPermutation,
    /// Honest approvals, predictions shifted by `Δ` and clamped to `[0, 1]`.
    PredictionOffset(f64),
}

/// The audited grid: honest, both constants, coins at `p = 0, 0.1, ..., 1`,
/// a random ranking, and prediction offsets `±0.1, ..., ±0.4`.
pub fn strategy_grid() -> Vec<DeviationStrategy> {
    let mut grid = vec![
        DeviationStrategy::Honest,
        DeviationStrategy::ConstantApprove,
        DeviationStrategy::ConstantReject,
    ];
    grid.extend((0..=10).map(|t| DeviationStrategy::Coin(t as f64 / 10.0)));
    grid.push(DeviationStrategy::RankPermutation);
    grid.extend([-4, -3, -2, -1, 1, 2, 3, 4].map(|t| DeviationStrategy::PredictionOffset(t as f64 / 10.0)));
    grid
}

impl DeviationStrategy {
    /// Rewrites `agent`'s entries in `x` and `y`, which must hold its
    /// honest reports. Randomness comes from `seed` only.
    pub fn apply(
        &self,
        agent: AgentId,
        x: &mut ApprovalProfile,
        y: &mut BeliefProfile,
        assignment: &ReviewAssignment,
        quota: f64,
        seed: u64,
    ) -> Result<()> {
        let bundle = assignment.reviews_of(agent);
        match *self {
            DeviationStrategy::Honest => {}
            DeviationStrategy::ConstantApprove | DeviationStrategy::ConstantReject => {
                let v = *self == DeviationStrategy::ConstantApprove;
                for &p in bundle {
                    x.set(p, agent, v)?;
                }
            }
            DeviationStrategy::Coin(prob) => {
                let mut rng = seed::substream(seed, &[tag::DEVIATION, agent.0 as u64]);
                for &p in bundle {
                    x.set(p, agent, rng.random::<f64>() < prob)?;
                }
            }
            DeviationStrategy::RankPermutation => {
                let quota = Quota::new(quota, assignment.m())?;
                let mut rng = seed::substream(seed, &[tag::DEVIATION, agent.0 as u64]);
                let mut order = bundle.to_vec();
                order.shuffle(&mut rng);
                let u: f64 = rng.random();
                for (idx, &p) in order.iter().enumerate() {
                    let w = approval_weight(idx + 1, quota);
                    x.set(p, agent, w == 1.0 || (w > 0.0 && u < w))?;
                }
            }
            DeviationStrategy::PredictionOffset(delta) => {
                for &p in bundle {
                    let v = y.belief(p, agent)?;
                    y.set(p, agent, (v + delta).clamp(0.0, 1.0))?;
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for DeviationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeviationStrategy::Honest => write!(f, "honest"),
            DeviationStrategy::ConstantApprove => write!(f, "constant-approve"),
            DeviationStrategy::ConstantReject => write!(f, "constant-reject"),
            DeviationStrategy::Coin(p) => write!(f, "coin:{p}"),
            DeviationStrategy::RankPermutation => write!(f, "rank-permutation"),
            DeviationStrategy::PredictionOffset(d) => write!(f, "offset:{d}"),
        }
    }
}

impl FromStr for DeviationStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::param(format!("unknown strategy {s:?}"));
        Ok(match s {
            "honest" => DeviationStrategy::Honest,
            "constant-approve" => DeviationStrategy::ConstantApprove,
            "constant-reject" => DeviationStrategy::ConstantReject,
            "rank-permutation" => DeviationStrategy::RankPermutation,
            _ => {
                if let Some(p) = s.strip_prefix("coin:") {
                    let p: f64 = p.parse().map_err(|_| bad())?;
                    if !(0.0..=1.0).contains(&p) {
                        return Err(Error::ProbabilityOutOfRange(p));
                    }
                    DeviationStrategy::Coin(p)
                } else if let Some(d) = s.strip_prefix("offset:") {
                    DeviationStrategy::PredictionOffset(d.parse().map_err(|_| bad())?)
                } else {
                    return Err(bad());
                }
            }
        })
    }
}

impl From<DeviationStrategy> for String {
    fn from(s: DeviationStrategy) -> Self {
        s.to_string()
    }
}

impl TryFrom<String> for DeviationStrategy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}
