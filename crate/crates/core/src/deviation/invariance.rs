use std::collections::BTreeSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{
    beliefs_from_predicted_profile, binarize_approvals, generate_assignment, generate_clustered_assignment, AgentId,
    Profile, Ranking, ReviewAssignment,
};
use crate::error::Result;
use crate::mechanisms::{partition_select, peer_nomination};
use crate::peerbts::{naive_topup_select, peerbts_select, PeerBtsParams};
use crate::sampling::generate_ground_profiles;
use crate::seed::{self, tag};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub agent: AgentId,
    pub truthful_member: bool,
    pub tested: usize,
    pub changes: usize,
    /// The first report that flipped membership, if any.
    pub first_change: Option<Ranking>,
}

/// Reruns `select` with `agent`'s ranking replaced by each deviation and
/// counts how often the agent's own membership differs from the truthful run.
pub fn audit_selection_invariance<F>(
    select: F,
    profile: &Profile,
    agent: AgentId,
    deviations: impl IntoIterator<Item = Ranking>,
) -> Result<InvarianceReport>
where
    F: Fn(&Profile) -> Result<BTreeSet<AgentId>>,
{
    let truthful_member = select(profile)?.contains(&agent);
    let mut report = InvarianceReport { agent, truthful_member, tested: 0, changes: 0, first_change: None };
    for ranking in deviations {
        report.tested += 1;
        let member = select(&profile.with_ranking(agent, ranking.clone())?)?.contains(&agent);
        if member != truthful_member {
            report.changes += 1;
            report.first_change.get_or_insert(ranking);
        }
    }
    Ok(report)
}

/// Every reordering of `bundle` inside `truth`: the bundle members take the
/// bundle's positions in each of the `m!` orders, everything else stays put.
/// Mechanisms that read only the bundle order see every possible report.
pub fn bundle_reorderings(truth: &Ranking, bundle: &[AgentId]) -> Vec<Ranking> {
    let slots: Vec<usize> = truth
        .iter()
        .enumerate()
        .filter(|(_, a)| bundle.contains(a))
        .map(|(pos, _)| pos)
        .collect();
    let mut items: Vec<AgentId> = slots.iter().map(|&s| truth.as_slice()[s]).collect();
    let mut out = Vec::new();
    permute(&mut items, 0, &mut |perm| {
        let mut order = truth.as_slice().to_vec();
        for (&s, &a) in slots.iter().zip(perm) {
            order[s] = a;
        }
        out.push(Ranking::new(order).expect("reordering keeps a permutation"));
    });
    out
}

fn permute(items: &mut [AgentId], start: usize, visit: &mut impl FnMut(&[AgentId])) {
    if start == items.len() {
        visit(items);
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        permute(items, start + 1, visit);
        items.swap(start, i);
    }
}

/// Sum of positional points `n - 1 - position` over everyone's ranking,
/// ties to the lower id.
pub fn borda_ranking(profile: &Profile) -> Ranking {
    let n = profile.n();
    let mut points = vec![0usize; n];
    for r in profile.rankings() {
        let len = r.len();
        for (pos, a) in r.iter().enumerate() {
            points[a.index()] += len - 1 - pos;
        }
    }
    let mut order: Vec<AgentId> = AgentId::all(n).collect();
    order.sort_by(|a, b| points[b.index()].cmp(&points[a.index()]).then(a.cmp(b)));
    Ranking::new(order).expect("ids are distinct")
}

/// A four-agent instance where topping up a quality ranking with a reward
/// ranking lets agent 3 win by misreporting.
#[derive(Clone, Debug)]
pub struct CounterexampleInstance {
    pub profile: Profile,
    pub h_ranking: Ranking,
    pub k: usize,
    pub d: usize,
    pub deviator: AgentId,
    pub deviation: Ranking,
}

pub fn topup_counterexample() -> CounterexampleInstance {
    let r = |v: &[u32]| Ranking::new(v.iter().map(|&a| AgentId(a)).collect()).expect("valid ranking");
    let profile = Profile::new(vec![r(&[2, 3, 4]), r(&[1, 3, 4]), r(&[1, 2, 4]), r(&[2, 1, 3])]).expect("valid profile");
    CounterexampleInstance {
        profile,
        h_ranking: r(&[2, 3, 1, 4]),
        k: 2,
        d: 1,
        deviator: AgentId(3),
        deviation: r(&[2, 1, 4]),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub naive_truthful: BTreeSet<AgentId>,
    pub naive_deviated: BTreeSet<AgentId>,
    pub naive: InvarianceReport,
    pub peerbts: InvarianceReport,
}

/// Replays the counterexample against the naive top-up (Borda quality
/// ranking, fixed reward ranking) and against PeerBTS on the complete
/// assignment, where the truth-serum reports stay fixed and only the
/// deviator's ranking changes.
pub fn audit_counterexample(instance: &CounterexampleInstance, seed: u64) -> Result<CounterexampleReport> {
    let CounterexampleInstance { profile, h_ranking, k, d, deviator, deviation } = instance;
    let naive = |p: &Profile| naive_topup_select(&borda_ranking(p), h_ranking, *k, *d);
    let naive_truthful = naive(profile)?;
    let naive_deviated = naive(&profile.with_ranking(*deviator, deviation.clone())?)?;
    let bundle = profile.ranking(*deviator).as_slice().to_vec();
    let naive_report =
        audit_selection_invariance(naive, profile, *deviator, bundle_reorderings(profile.ranking(*deviator), &bundle))?;

    let n = profile.n();
    let assignment = ReviewAssignment::from_reviews(
        AgentId::all(n).map(|a| AgentId::all(n).filter(|&b| b != a).collect()).collect(),
    )?;
    let quota = *k as f64 * assignment.m() as f64 / n as f64;
    let x = binarize_approvals(profile, &assignment, quota, seed)?;
    let y = beliefs_from_predicted_profile(profile, &assignment, quota)?;
    let params = PeerBtsParams::new(*k, *d, 1.0);
    let hybrid = |p: &Profile| Ok(peerbts_select(p, &x, &y, &assignment, &params, seed)?.winner_set());
    let peerbts_report =
        audit_selection_invariance(hybrid, profile, *deviator, bundle_reorderings(profile.ranking(*deviator), &bundle))?;
    Ok(CounterexampleReport { naive_truthful, naive_deviated, naive: naive_report, peerbts: peerbts_report })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReplayMechanism {
    PeerNomination,
    Partition,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub mechanism: ReplayMechanism,
    pub instances: usize,
    pub reports_tested: usize,
    pub violations: usize,
    /// `(instance, agent)` of every violation.
    pub violators: Vec<(usize, AgentId)>,
}

/// Random small instances (n in 12..=30, m in 3..=5, Mallows profiles with
/// random dispersion); every agent in turn tries every reordering of its
/// bundle, and the replay counts membership flips.
pub fn replay_strategyproofness(mechanism: ReplayMechanism, instances: usize, seed: u64) -> Result<ReplayReport> {
    let results = (0..instances)
        .into_par_iter()
        .map(|t| replay_instance(mechanism, seed::derive(seed, &[tag::TRIAL, t as u64])))
        .collect::<Result<Vec<_>>>()?;
    let mut report = ReplayReport { mechanism, instances, reports_tested: 0, violations: 0, violators: Vec::new() };
    for (t, (tested, flips)) in results.into_iter().enumerate() {
        report.reports_tested += tested;
        report.violations += flips.len();
        report.violators.extend(flips.into_iter().map(|a| (t, a)));
    }
    Ok(report)
}

fn replay_instance(mechanism: ReplayMechanism, seed: u64) -> Result<(usize, Vec<AgentId>)> {
    let mut rng = seed::substream(seed, &[tag::MECHANISM]);
    let (n, m, clusters) = loop {
        let n = rng.random_range(12..=30);
        let m = rng.random_range(3..=5);
        if mechanism == ReplayMechanism::PeerNomination {
            break (n, m, 0);
        }
        let options: Vec<usize> = [2, 3, 4].into_iter().filter(|&c| n % c == 0 && m <= n - n / c).collect();
        if !options.is_empty() {
            break (n, m, options[rng.random_range(0..options.len())]);
        }
    };
    let k = rng.random_range(2..=n / 3);
    let phi = rng.random_range(0.0..=1.0);
    let profile = generate_ground_profiles(n, phi, seed)?;
    let mut tested = 0;
    let mut flips = Vec::new();
    match mechanism {
        ReplayMechanism::PeerNomination => {
            let assignment = generate_assignment(n, m, seed)?;
            let select = |p: &Profile| Ok(peer_nomination(p, &assignment, k)?.winners);
            for agent in AgentId::all(n) {
                let devs = bundle_reorderings(profile.ranking(agent), assignment.reviews_of(agent));
                let r = audit_selection_invariance(select, &profile, agent, devs)?;
                tested += r.tested;
                if r.changes > 0 {
                    flips.push(agent);
                }
            }
        }
        ReplayMechanism::Partition => {
            let clustered = generate_clustered_assignment(n, m, clusters, seed)?;
            let select = |p: &Profile| Ok(partition_select(p, &clustered, k, seed)?.winners);
            for agent in AgentId::all(n) {
                let devs = bundle_reorderings(profile.ranking(agent), clustered.assignment.reviews_of(agent));
                let r = audit_selection_invariance(select, &profile, agent, devs)?;
                tested += r.tested;
                if r.changes > 0 {
                    flips.push(agent);
                }
            }
        }
    }
    Ok((tested, flips))
}
