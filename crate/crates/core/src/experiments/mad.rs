use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::domain::AgentId;
use crate::error::{Error, Result};

/// One reviewer's predicted mean score for one proposal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScorePrediction {
    pub proposal: AgentId,
    pub reviewer: AgentId,
    pub prediction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReviewerMad {
    pub reviewer: AgentId,
    pub reviews: usize,
    pub mad: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MadSummary {
    pub reviewers: Vec<ReviewerMad>,
    pub mean: f64,
    /// Sample standard deviation of the per-reviewer values.
    pub sd: f64,
    pub below_0_25: f64,
    pub below_1_0: f64,
}

/// Mean absolute difference between each reviewer's predictions and the
/// proposals' final aggregate scores. Predictions for proposals without an
/// aggregate are an error listing every such id.
pub fn mad_stats(predictions: &[ScorePrediction], finals: &HashMap<AgentId, f64>) -> Result<MadSummary> {
    let mut unmatched: Vec<AgentId> = predictions
        .iter()
        .map(|p| p.proposal)
        .filter(|p| !finals.contains_key(p))
        .collect();
    unmatched.sort();
    unmatched.dedup();
    if !unmatched.is_empty() {
        let ids: Vec<String> = unmatched.iter().map(ToString::to_string).collect();
        return Err(Error::InvalidProfile(format!("predictions for unknown proposals: {}", ids.join(", "))));
    }
    if predictions.is_empty() {
        return Err(Error::InvalidProfile("no predictions".into()));
    }
    let mut per: BTreeMap<AgentId, (f64, usize)> = BTreeMap::new();
    for p in predictions {
        let e = per.entry(p.reviewer).or_default();
        e.0 += (p.prediction - finals[&p.proposal]).abs();
        e.1 += 1;
    }
    let reviewers: Vec<ReviewerMad> = per
        .into_iter()
        .map(|(reviewer, (sum, reviews))| ReviewerMad { reviewer, reviews, mad: sum / reviews as f64 })
        .collect();
    let count = reviewers.len() as f64;
    let mean = reviewers.iter().map(|r| r.mad).sum::<f64>() / count;
    let sd = if reviewers.len() > 1 {
        (reviewers.iter().map(|r| (r.mad - mean).powi(2)).sum::<f64>() / (count - 1.0)).sqrt()
    } else {
        0.0
    };
    let frac = |t: f64| reviewers.iter().filter(|r| r.mad < t).count() as f64 / count;
    Ok(MadSummary { mean, sd, below_0_25: frac(0.25), below_1_0: frac(1.0), reviewers })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(proposal: u32, reviewer: u32, prediction: f64) -> ScorePrediction {
        ScorePrediction { proposal: AgentId(proposal), reviewer: AgentId(reviewer), prediction }
    }

    #[test]
    fn exact_predictions_have_zero_mad() {
        let finals = HashMap::from([(AgentId(1), 3.0), (AgentId(2), 4.5)]);
        let s = mad_stats(&[p(1, 2, 3.0), p(2, 1, 4.5)], &finals).unwrap();
        assert!(s.reviewers.iter().all(|r| r.mad == 0.0));
        assert_eq!(s.below_0_25, 1.0);
    }

    #[test]
    fn single_reviewer_half_point() {
        let finals = HashMap::from([(AgentId(1), 4.0), (AgentId(2), 4.0)]);
        let s = mad_stats(&[p(1, 3, 3.0), p(2, 3, 4.0)], &finals).unwrap();
        assert_eq!(s.reviewers[0].mad, 0.5);
        assert_eq!(s.mean, 0.5);
    }

    #[test]
    fn unmatched_ids_are_reported() {
        let finals = HashMap::from([(AgentId(1), 4.0)]);
        let err = mad_stats(&[p(1, 3, 3.0), p(7, 3, 4.0), p(9, 2, 1.0)], &finals).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains('7') && msg.contains('9'));
    }
}
