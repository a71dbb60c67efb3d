//! Mallows-model profiles and predicted profiles.
//!
//! Rankings are drawn with the repeated-insertion construction: the items of
//! the base ranking are inserted one at a time, the `i`-th (0-based) landing
//! `j` slots above the bottom with probability proportional to `phi^j`.
//! Each insertion adds exactly `j` discordant pairs, so the result follows
//! `P(r) ∝ phi^KT(base, r)` exactly.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{AgentId, PredictedRankings, Profile, Ranking, ReviewAssignment};
use crate::error::{Error, Result};
use crate::seed::{self, tag};

/// Parameters of a Mallows distribution around `base`.
#[derive(Clone, Debug, PartialEq)]
pub struct MallowsParams {
    pub base: Ranking,
    phi: f64,
}

impl MallowsParams {
    pub fn new(base: Ranking, phi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&phi) {
            return Err(Error::param(format!("dispersion {phi} outside [0, 1]")));
        }
        Ok(MallowsParams { base, phi })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Ranking {
        Ranking::new_unchecked(insert_sample(self.base.as_slice(), self.phi, rng))
    }
}

/// Number of slots (0..=i) the `i`-th item moves above the bottom.
fn displacement<R: Rng + ?Sized>(i: usize, phi: f64, rng: &mut R) -> usize {
    if i == 0 || phi == 0.0 {
        return 0;
    }
    if phi == 1.0 {
        return rng.random_range(0..=i);
    }
    // Inverse CDF of the geometric law truncated to 0..=i.
    let u: f64 = rng.random();
    let tail = 1.0 - u * (1.0 - phi.powi(i as i32 + 1));
    let j = (tail.ln() / phi.ln()).ceil() as i64 - 1;
    j.clamp(0, i as i64) as usize
}

fn insert_sample<R: Rng + ?Sized>(base: &[AgentId], phi: f64, rng: &mut R) -> Vec<AgentId> {
    let mut out = Vec::with_capacity(base.len());
    for (i, &item) in base.iter().enumerate() {
        let up = displacement(i, phi, rng);
        out.insert(i - up, item);
    }
    out
}

/// Draws one Mallows ranking from its own seed.
pub fn mallows_sample(params: &MallowsParams, seed: u64) -> Ranking {
    params.sample(&mut seed::rng(seed))
}

/// Number of pairs ordered differently by `a` and `b` (same domain).
pub fn kendall_tau_distance(a: &Ranking, b: &Ranking) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::InvalidRanking("Kendall tau needs rankings over one domain".into()));
    }
    let pos: HashMap<AgentId, usize> = b.iter().enumerate().map(|(p, x)| (x, p)).collect();
    let mapped = a
        .iter()
        .map(|x| pos.get(&x).copied())
        .collect::<Option<Vec<usize>>>()
        .ok_or_else(|| Error::InvalidRanking("Kendall tau needs rankings over one domain".into()))?;
    let mut d = 0;
    for i in 0..mapped.len() {
        for j in i + 1..mapped.len() {
            if mapped[i] > mapped[j] {
                d += 1;
            }
        }
    }
    Ok(d)
}

/// Ground-truth style profile: every agent observes the identity order
/// (agent 1 best) through independent Mallows noise, without itself.
pub fn generate_ground_profiles(n: usize, phi: f64, seed: u64) -> Result<Profile> {
    if n < 2 {
        return Err(Error::param("profiles need n >= 2"));
    }
    if !(0.0..=1.0).contains(&phi) {
        return Err(Error::param(format!("dispersion {phi} outside [0, 1]")));
    }
    let rankings = AgentId::all(n)
        .map(|i| {
            let base = Ranking::identity_without(n, Some(i));
            let mut rng = seed::substream(seed, &[tag::GROUND, i.0 as u64]);
            Ranking::new_unchecked(insert_sample(base.as_slice(), phi, &mut rng))
        })
        .collect();
    Profile::new(rankings)
}

/// Population models for prediction skill.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum PredictionModel {
    Clairvoyant,
    Random,
    Divided,
    Deciles,
    /// Everyone shares one dispersion.
    Uniform(f64),
}

impl PredictionModel {
    /// Prediction dispersion φ* of `agent` in a population of `n`.
    pub fn dispersion(self, agent: AgentId, n: usize) -> f64 {
        match self {
            PredictionModel::Clairvoyant => 0.0,
            PredictionModel::Random => 1.0,
            PredictionModel::Divided => {
                if (agent.0 as f64) < n as f64 / 2.0 {
                    0.0
                } else {
                    1.0
                }
            }
            PredictionModel::Deciles => decile(agent, n) as f64 / 10.0,
            PredictionModel::Uniform(phi) => phi,
        }
    }
}

/// Decile 1..=10 of `agent`, lower ids in lower deciles.
pub fn decile(agent: AgentId, n: usize) -> usize {
    (agent.0 as usize * 10).div_ceil(n).clamp(1, 10)
}

impl fmt::Display for PredictionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredictionModel::Clairvoyant => write!(f, "clairvoyant"),
            PredictionModel::Random => write!(f, "random"),
            PredictionModel::Divided => write!(f, "divided"),
            PredictionModel::Deciles => write!(f, "deciles"),
            PredictionModel::Uniform(phi) => write!(f, "uniform:{phi}"),
        }
    }
}

impl From<PredictionModel> for String {
    fn from(m: PredictionModel) -> Self {
        m.to_string()
    }
}

impl TryFrom<String> for PredictionModel {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for PredictionModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "clairvoyant" => Ok(PredictionModel::Clairvoyant),
            "random" => Ok(PredictionModel::Random),
            "divided" => Ok(PredictionModel::Divided),
            "deciles" => Ok(PredictionModel::Deciles),
            other => match other.strip_prefix("uniform:").map(str::parse::<f64>) {
                Some(Ok(phi)) if (0.0..=1.0).contains(&phi) => Ok(PredictionModel::Uniform(phi)),
                _ => Err(Error::param(format!(
                    "unknown prediction model {s:?} (clairvoyant, random, divided, deciles, uniform:<phi>)"
                ))),
            },
        }
    }
}

/// Every agent's predicted view of other agents' rankings. An agent's
/// prediction of its own ranking is the ranking itself.
#[derive(Clone, Debug)]
pub struct PredictedProfiles {
    own: Profile,
    predicted: HashMap<(AgentId, AgentId), Ranking>,
}

impl PredictedProfiles {
    pub fn len(&self) -> usize {
        self.predicted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicted.is_empty()
    }

    /// Replaces `predictor`'s predicted ranking of `reviewer`.
    pub fn insert(&mut self, predictor: AgentId, reviewer: AgentId, ranking: Ranking) {
        self.predicted.insert((predictor, reviewer), ranking);
    }
}

impl PredictedRankings for PredictedProfiles {
    fn predicted(&self, predictor: AgentId, reviewer: AgentId) -> Option<&Ranking> {
        if predictor == reviewer {
            return Some(self.own.ranking(reviewer));
        }
        self.predicted.get(&(predictor, reviewer))
    }
}

fn predict_one(model: PredictionModel, profile: &Profile, predictor: AgentId, reviewer: AgentId, seed: u64) -> Ranking {
    let phi = model.dispersion(predictor, profile.n());
    let base = profile.ranking(reviewer);
    if phi == 0.0 {
        return base.clone();
    }
    let mut rng = seed::substream(seed, &[tag::PREDICTION, predictor.0 as u64, reviewer.0 as u64]);
    Ranking::new_unchecked(insert_sample(base.as_slice(), phi, &mut rng))
}

/// Samples every agent's predicted ranking of every other agent.
pub fn generate_predictions(model: PredictionModel, profile: &Profile, seed: u64) -> PredictedProfiles {
    let n = profile.n();
    let mut predicted = HashMap::with_capacity(n * n);
    for i in AgentId::all(n) {
        for s in AgentId::all(n).filter(|&s| s != i) {
            predicted.insert((i, s), predict_one(model, profile, i, s, seed));
        }
    }
    PredictedProfiles { own: profile.clone(), predicted }
}

/// Samples only the predicted rankings belief computation needs: agent `i`
/// predicts each reviewer on the boards of the proposals it reviews. Every
/// sampled entry equals the one [`generate_predictions`] produces.
pub fn generate_predictions_for(
    model: PredictionModel,
    profile: &Profile,
    assignment: &ReviewAssignment,
    seed: u64,
) -> PredictedProfiles {
    let mut predicted = HashMap::new();
    for i in assignment.agents() {
        for &j in assignment.reviews_of(i) {
            for &s in assignment.board_of(j) {
                if s != i {
                    predicted
                        .entry((i, s))
                        .or_insert_with(|| predict_one(model, profile, i, s, seed));
                }
            }
        }
    }
    PredictedProfiles { own: profile.clone(), predicted }
}
