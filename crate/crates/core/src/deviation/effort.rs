use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::incentive::Welford;
use crate::domain::{approval_weight, binarize_approvals, AgentId, Quota, Ranking};
use crate::error::{Error, Result};
use crate::experiments::{simulate_trial, ExperimentConfig, MechanismKind};
use crate::mechanisms::peer_nomination;
use crate::peerbts::{score_reports, PeerBtsParams};
use crate::rbts::{selection_probability, sub_lotteries};
use crate::sampling::MallowsParams;
use crate::seed::{self, tag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EffortMechanism {
    /// PeerNomination with target `k` and nothing else.
    PeerNomination,
    PeerBts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffortGapReport {
    pub mechanism: EffortMechanism,
    pub config: ExperimentConfig,
    pub trials: usize,
    pub effortful: f64,
    pub effortless: f64,
    /// Mean paired difference of selection probabilities.
    pub delta: f64,
    pub delta_se: f64,
    pub z: f64,
    /// Largest per-trial difference in absolute value.
    pub max_abs_pair_diff: f64,
    /// One-sided test at the 95% level.
    pub significant: bool,
}

/// Selection probability of one agent when it puts in effort (true ranking,
/// exact predictions of everyone else) versus none (a random ranking of
/// its bundle, uniformly random predictions). Each trial samples the world
/// from `config`, picks the agent at random and evaluates both variants on
/// the same randomness. The probability is exact given the reports:
/// quality winners count 1, everyone else their lottery win probability.
pub fn audit_effort_gap(mechanism: EffortMechanism, config: &ExperimentConfig) -> Result<EffortGapReport> {
    config.validate()?;
    if config.mechanism != MechanismKind::PeerBts {
        return Err(Error::param("the effort audit runs on PeerBTS configurations"));
    }
    let pairs = (0..config.trials)
        .into_par_iter()
        .map(|t| effort_pair(mechanism, config, config.trial_seed(t)))
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let (mut on, mut off, mut diff) = (Welford::default(), Welford::default(), Welford::default());
    let mut max_abs_pair_diff: f64 = 0.0;
    for &(a, b) in &pairs {
        on.push(a);
        off.push(b);
        diff.push(a - b);
        max_abs_pair_diff = max_abs_pair_diff.max((a - b).abs());
    }
    let delta_se = diff.se();
    let z = if delta_se > 0.0 { diff.mean / delta_se } else { 0.0 };
    Ok(EffortGapReport {
        mechanism,
        config: config.clone(),
        trials: config.trials,
        effortful: on.mean,
        effortless: off.mean,
        delta: diff.mean,
        delta_se,
        z,
        max_abs_pair_diff,
        significant: z > 1.6448536269514722,
    })
}

fn effort_pair(mechanism: EffortMechanism, config: &ExperimentConfig, ts: u64) -> Result<(f64, f64)> {
    let state = simulate_trial(config, ts)?;
    let assignment = &state.assignment;
    let focal = AgentId::from_index(seed::substream(ts, &[tag::DEVIATION]).random_range(0..config.n));
    let truth = state.profile.ranking(focal).clone();
    let careless = shuffle_bundle(&truth, assignment.reviews_of(focal), ts);
    let quota = Quota::new(state.quota, config.m)?;
    let params = PeerBtsParams { k: config.k, d: config.d, epsilon: config.epsilon, quota_basis: config.quota_basis };
    let target = match mechanism {
        EffortMechanism::PeerNomination => config.k,
        EffortMechanism::PeerBts => params.quality_target(),
    };
    let prob = |ranking: &Ranking, phi_star: f64| -> Result<f64> {
        let profile = state.profile.with_ranking(focal, ranking.clone())?;
        if peer_nomination(&profile, assignment, target)?.contains(focal) {
            return Ok(1.0);
        }
        if mechanism == EffortMechanism::PeerNomination || config.d == 0 {
            return Ok(0.0);
        }
        let x = binarize_approvals(&profile, assignment, state.quota, ts)?;
        let mut y = state.y.clone();
        for &j in assignment.reviews_of(focal) {
            let mut total = 0.0;
            for &s in assignment.board_of(j) {
                let predicted = if s == focal {
                    ranking.clone()
                } else {
                    let params = MallowsParams::new(state.profile.ranking(s).clone(), phi_star)?;
                    params.sample(&mut seed::substream(ts, &[tag::DEVIATION, focal.0 as u64, s.0 as u64]))
                };
                let rank = predicted
                    .rank_within(j, assignment.reviews_of(s))
                    .ok_or(Error::MissingPrediction { predictor: focal, reviewer: s })?;
                total += approval_weight(rank, quota);
            }
            y.set(j, focal, (total / config.m as f64).clamp(0.0, 1.0))?;
        }
        let scores = score_reports(&x, &y, assignment, seed::derive(ts, &[tag::MECHANISM]))?;
        Ok(selection_probability(focal, &sub_lotteries(&scores, config.epsilon), config.d))
    };
    Ok((prob(&truth, 0.0)?, prob(&careless, 1.0)?))
}

/// `truth` with the bundle members shuffled among their own positions.
fn shuffle_bundle(truth: &Ranking, bundle: &[AgentId], ts: u64) -> Ranking {
    let mut members: Vec<AgentId> = truth.iter().filter(|a| bundle.contains(a)).collect();
    members.shuffle(&mut seed::substream(ts, &[tag::DEVIATION, 0]));
    let mut next = members.into_iter();
    let order = truth
        .iter()
        .map(|a| if bundle.contains(&a) { next.next().expect("same count") } else { a })
        .collect();
    Ranking::new(order).expect("shuffle keeps a permutation")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::PredictionModel;

    fn cell(d: usize, trials: usize) -> ExperimentConfig {
        let mut c = ExperimentConfig::reference_cell(3, d, 8.0, 0.5, PredictionModel::Clairvoyant);
        c.n = 40;
        c.k = 8;
        c.trials = trials;
        c
    }

    #[test]
    fn peer_nomination_gap_is_exactly_zero() {
        let r = audit_effort_gap(EffortMechanism::PeerNomination, &cell(2, 100)).unwrap();
        assert_eq!(r.max_abs_pair_diff, 0.0);
        assert_eq!(r.delta, 0.0);
        assert!(!r.significant);
    }

    #[test]
    fn no_lottery_no_gap() {
        let r = audit_effort_gap(EffortMechanism::PeerBts, &cell(0, 100)).unwrap();
        assert_eq!(r.max_abs_pair_diff, 0.0);
    }

    #[test]
    fn shuffle_moves_only_bundle() {
        let truth = Ranking::new((1..=9).map(AgentId).collect()).unwrap();
        let bundle = [AgentId(2), AgentId(5), AgentId(9)];
        let r = shuffle_bundle(&truth, &bundle, 4);
        for (pos, a) in r.iter().enumerate() {
            if !bundle.contains(&a) {
                assert_eq!(truth.as_slice()[pos], a);
            }
        }
    }
}
