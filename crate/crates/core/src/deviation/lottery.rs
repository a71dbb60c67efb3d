use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::incentive::Welford;
use super::strategy::DeviationStrategy;
use crate::domain::{binarize_approvals, generate_assignment, AgentId, ApprovalProfile, BeliefProfile, Profile, Ranking, ReviewAssignment};
use crate::error::{Error, Result};
use crate::experiments::mean_lottery_share;
use crate::rbts::{board_orders, sub_lotteries, Quadratic, ScoreTable, SubLottery};
use crate::sampling::MallowsParams;
use crate::seed::{self, tag};

/// A common-prior world for the deviation search. The quality order of the
/// agents is uniformly random and unknown; each reviewer ranks a Mallows
/// draw around it and approves under quota `k m / n`. Honest predictions are
/// the prior probability that another reviewer of the same proposal
/// approves, given the predictor's own approval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LotteryWorld {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub phi: f64,
    pub epsilon: f64,
}

impl Default for LotteryWorld {
    fn default() -> Self {
        LotteryWorld { n: 12, m: 3, k: 4, phi: 0.5, epsilon: 1.0 }
    }
}

impl LotteryWorld {
    fn quota(&self) -> f64 {
        self.k as f64 * self.m as f64 / self.n as f64
    }

    fn validate(&self) -> Result<()> {
        if self.m < 3 {
            return Err(Error::BoardTooSmall(self.m));
        }
        if self.m >= self.n || self.k == 0 || self.k >= self.n {
            return Err(Error::param(format!("need m < n and 0 < k < n (n = {}, m = {}, k = {})", self.n, self.m, self.k)));
        }
        if !(0.0..=1.0).contains(&self.phi) || !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::param("phi must be in [0, 1] and epsilon positive"));
        }
        Ok(())
    }

    fn sample(&self, seed: u64) -> Result<(ReviewAssignment, ApprovalProfile)> {
        let assignment = generate_assignment(self.n, self.m, seed)?;
        let mut quality: Vec<AgentId> = AgentId::all(self.n).collect();
        quality.shuffle(&mut seed::substream(seed, &[tag::GROUND]));
        let rankings = AgentId::all(self.n)
            .map(|s| {
                let base = Ranking::new(quality.iter().copied().filter(|&a| a != s).collect())?;
                Ok(MallowsParams::new(base, self.phi)?.sample(&mut seed::substream(seed, &[tag::GROUND, s.0 as u64])))
            })
            .collect::<Result<Vec<_>>>()?;
        let profile = Profile::new(rankings)?;
        let x = binarize_approvals(&profile, &assignment, self.quota(), seed)?;
        Ok((assignment, x))
    }
}

/// `[P(peer approves | own reject), P(peer approves | own approve)]`,
/// estimated over `samples` sampled worlds from every ordered pair of
/// reviewers sharing a board.
pub fn estimate_posteriors(world: &LotteryWorld, samples: usize, seed: u64) -> Result<[f64; 2]> {
    world.validate()?;
    let counts = (0..samples)
        .into_par_iter()
        .map(|t| {
            let (assignment, x) = world.sample(seed::derive(seed, &[tag::TRIAL, t as u64]))?;
            let mut c = [[0u64; 2]; 2];
            for p in assignment.agents() {
                let board = x.board(p);
                for (a, &(_, xa)) in board.iter().enumerate() {
                    for (b, &(_, xb)) in board.iter().enumerate() {
                        if a != b {
                            c[usize::from(xa)][usize::from(xb)] += 1;
                        }
                    }
                }
            }
            Ok::<_, Error>(c)
        })
        .try_reduce(|| [[0u64; 2]; 2], |a, b| {
            let mut s = a;
            for i in 0..2 {
                for j in 0..2 {
                    s[i][j] += b[i][j];
                }
            }
            Ok(s)
        })?;
    let post = |own: usize| {
        let total = counts[own][0] + counts[own][1];
        if total == 0 {
            0.5
        } else {
            counts[own][1] as f64 / total as f64
        }
    };
    Ok([post(0), post(1)])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyRow {
    pub strategy: DeviationStrategy,
    pub mean: f64,
    pub se: f64,
    /// Mean of (this strategy − honest) over paired trials.
    pub diff_vs_honest: f64,
    pub diff_se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LotteryAudit {
    pub world: LotteryWorld,
    pub posteriors: [f64; 2],
    pub opponents: DeviationStrategy,
    pub trials: usize,
    pub rows: Vec<StrategyRow>,
    pub best: DeviationStrategy,
    /// Honest is within two standard errors (of the paired difference) of
    /// the best strategy.
    pub honest_within_2se: bool,
}

/// Expected mean lottery share of one deviating agent per strategy, every
/// other agent playing `opponents`. Strategies are compared on common
/// random numbers: each trial fixes the world, the deviator and the board
/// orders, then replays every strategy.
pub fn audit_lottery_deviation(
    world: &LotteryWorld,
    strategies: &[DeviationStrategy],
    opponents: DeviationStrategy,
    trials: usize,
    seed: u64,
) -> Result<LotteryAudit> {
    world.validate()?;
    let honest_idx = strategies
        .iter()
        .position(|&s| s == DeviationStrategy::Honest)
        .ok_or_else(|| Error::param("the strategy grid must contain honest"))?;
    if trials < 2 {
        return Err(Error::param("need at least 2 trials"));
    }
    let posteriors = estimate_posteriors(world, 2000, seed::derive(seed, &[tag::GROUND]))?;
    let quota = world.quota();
    let per_trial = (0..trials)
        .into_par_iter()
        .map(|t| {
            let ts = seed::derive(seed, &[tag::TRIAL, t as u64]);
            let (assignment, x0) = world.sample(ts)?;
            let y0 = BeliefProfile::from_fn(&assignment, |p, r| Ok(posteriors[usize::from(x0.approved(p, r)?)]))?;
            let focal = AgentId::from_index(seed::substream(ts, &[tag::DEVIATION]).random_range(0..world.n));
            let (mut xo, mut yo) = (x0.clone(), y0.clone());
            for other in assignment.agents().filter(|&a| a != focal) {
                opponents.apply(other, &mut xo, &mut yo, &assignment, quota, seed::derive(ts, &[tag::DEVIATION, 0]))?;
            }
            let orders = board_orders(&assignment, seed::derive(ts, &[tag::BOARD_ORDER]));
            strategies
                .iter()
                .map(|s| {
                    let (mut x, mut y) = (xo.clone(), yo.clone());
                    s.apply(focal, &mut x, &mut y, &assignment, quota, seed::derive(ts, &[tag::DEVIATION, 1]))?;
                    let scores = ScoreTable::compute(&orders, &x, &y, &Quadratic)?;
                    Ok(mean_lottery_share(&sub_lotteries(&scores, world.epsilon), &assignment)[focal.index()])
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<StrategyRow> = strategies
        .iter()
        .enumerate()
        .map(|(si, &strategy)| {
            let mut v = Welford::default();
            let mut d = Welford::default();
            for t in &per_trial {
                v.push(t[si]);
                d.push(t[si] - t[honest_idx]);
            }
            StrategyRow { strategy, mean: v.mean, se: v.se(), diff_vs_honest: d.mean, diff_se: d.se() }
        })
        .collect();
    let best_row = rows
        .iter()
        .max_by(|a, b| a.mean.total_cmp(&b.mean))
        .expect("grid is non-empty");
    let honest_within_2se = best_row.diff_vs_honest <= 2.0 * best_row.diff_se;
    Ok(LotteryAudit {
        world: *world,
        posteriors,
        opponents,
        trials,
        best: best_row.strategy,
        honest_within_2se,
        rows,
    })
}

/// Proposals whose sub-lottery differs between two runs.
pub fn changed_sub_lotteries(before: &[SubLottery], after: &[SubLottery]) -> Vec<AgentId> {
    before
        .iter()
        .zip(after)
        .filter(|(a, b)| a != b)
        .map(|(a, _)| a.proposal)
        .collect()
}
