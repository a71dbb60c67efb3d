use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{AgentId, ApprovalProfile, BeliefProfile, ReviewAssignment};
use crate::error::{Error, Result};
use crate::rbts::{rbts_scores, BoardOrder, Quadratic, ScoringRule};
use crate::seed;

/// What the reference reviewer's prediction is in the stylized world.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceMode {
    /// Drawn uniformly from `[0, 1]` each trial.
    Sampled,
    /// Fixed at the uniform mean 0.5, so the shadow equals the own report.
    MeanField,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StylizedReporter {
    /// Approves with the true approval rate, independently of the peer.
    Honest,
    /// Approves with probability one half.
    Coin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncentiveEstimate {
    pub trials: usize,
    pub information: f64,
    pub information_se: f64,
    pub prediction: f64,
    pub prediction_se: f64,
}

/// Monte Carlo over one three-reviewer board: the audited reviewer, a
/// reference whose prediction follows `reference`, and a peer approving
/// with probability `approval_rate`. The audited reviewer reports per
/// `reporter` and predicts `prediction`. Scores come from the regular
/// truth-serum path.
pub fn incentive_example(
    approval_rate: f64,
    reporter: StylizedReporter,
    prediction: f64,
    reference: ReferenceMode,
    trials: usize,
    seed: u64,
) -> Result<IncentiveEstimate> {
    for p in [approval_rate, prediction] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ProbabilityOutOfRange(p));
        }
    }
    if trials < 2 {
        return Err(Error::param("need at least 2 trials"));
    }
    let (me, refr, peer, proposal) = (AgentId(1), AgentId(2), AgentId(3), AgentId(4));
    let assignment = ReviewAssignment::from_reviews(
        AgentId::all(4).map(|a| AgentId::all(4).filter(|&b| b != a).collect()).collect(),
    )?;
    let order = BoardOrder::new(proposal, vec![me, refr, peer], &assignment)?;
    let mut rng = seed::rng(seed);
    let mut info = Welford::default();
    let mut pred = Welford::default();
    for _ in 0..trials {
        let peer_report = rng.random::<f64>() < approval_rate;
        let my_report = match reporter {
            StylizedReporter::Honest => rng.random::<f64>() < approval_rate,
            StylizedReporter::Coin => rng.random::<f64>() < 0.5,
        };
        let ref_prediction = match reference {
            ReferenceMode::Sampled => rng.random::<f64>(),
            ReferenceMode::MeanField => 0.5,
        };
        let x = ApprovalProfile::from_fn(&assignment, None, |p, r| {
            Ok(p == proposal && ((r == me && my_report) || (r == peer && peer_report)))
        })?;
        let y = BeliefProfile::from_fn(&assignment, |p, r| {
            Ok(match (p == proposal, r) {
                (true, r) if r == me => prediction,
                (true, r) if r == refr => ref_prediction,
                _ => 0.5,
            })
        })?;
        let total = rbts_scores(&order, &x, &y, &Quadratic)?[0].1;
        let prediction_part = Quadratic.score(prediction, peer_report);
        pred.push(prediction_part);
        info.push(total - prediction_part);
    }
    Ok(IncentiveEstimate {
        trials,
        information: info.mean,
        information_se: info.se(),
        prediction: pred.mean,
        prediction_se: pred.se(),
    })
}

/// Running mean and variance.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Welford {
    pub n: usize,
    pub mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn se(&self) -> f64 {
        (self.variance() / self.n.max(1) as f64).sqrt()
    }
}
