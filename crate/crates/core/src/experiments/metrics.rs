use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ExperimentRecord;
use crate::domain::{AgentId, ReviewAssignment};
use crate::rbts::SubLottery;
use crate::sampling::decile;

/// Share of the true top-`k` (agents `1..=k`) that was selected.
pub fn recall_at_k(winners: &BTreeSet<AgentId>, k: usize) -> f64 {
    winners.iter().filter(|a| a.0 as usize <= k).count() as f64 / k as f64
}

/// Selections from outside the true top-`k`, normalized by `k`. Together with
/// recall it satisfies `|W| / k = recall + anti_recall`.
pub fn anti_recall(winners: &BTreeSet<AgentId>, k: usize) -> f64 {
    winners.iter().filter(|a| a.0 as usize > k).count() as f64 / k as f64
}

/// `ℓ̄_i = (1/m) Σ_{j ∈ A(i)} L_j(i)` for every agent.
pub fn mean_lottery_share(sub_lotteries: &[SubLottery], assignment: &ReviewAssignment) -> Vec<f64> {
    let m = assignment.m() as f64;
    assignment
        .agents()
        .map(|i| {
            assignment
                .reviews_of(i)
                .iter()
                .map(|&j| sub_lotteries[j.index()].share_of(i))
                .sum::<f64>()
                / m
        })
        .collect()
}

/// Mean lottery share per decile (1..=10) of agent id, over all records.
pub fn lottery_share_by_decile<'a>(records: impl IntoIterator<Item = &'a ExperimentRecord>) -> Vec<(usize, f64)> {
    let mut sum = [0.0; 10];
    let mut count = [0usize; 10];
    for r in records {
        let n = r.mean_lottery_share.len();
        for (idx, &s) in r.mean_lottery_share.iter().enumerate() {
            let dec = decile(AgentId::from_index(idx), n) - 1;
            sum[dec] += s;
            count[dec] += 1;
        }
    }
    (0..10)
        .filter(|&i| count[i] > 0)
        .map(|i| (i + 1, sum[i] / count[i] as f64))
        .collect()
}

/// Mean recall and anti-recall for one `(d, φ)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecallRow {
    pub d: usize,
    pub phi: f64,
    pub recall: f64,
    pub anti_recall: f64,
    pub trials: usize,
}

pub fn recall_by_d_phi<'a>(records: impl IntoIterator<Item = &'a ExperimentRecord>) -> Vec<RecallRow> {
    let mut cells: BTreeMap<(usize, u64), (f64, f64, usize)> = BTreeMap::new();
    for r in records {
        let e = cells.entry((r.config.d, r.config.phi.to_bits())).or_insert((0.0, 0.0, 0));
        e.0 += r.recall;
        e.1 += r.anti_recall;
        e.2 += 1;
    }
    let mut rows: Vec<RecallRow> = cells
        .into_iter()
        .map(|((d, phi), (rec, anti, t))| RecallRow {
            d,
            phi: f64::from_bits(phi),
            recall: rec / t as f64,
            anti_recall: anti / t as f64,
            trials: t,
        })
        .collect();
    rows.sort_by(|a, b| a.d.cmp(&b.d).then(a.phi.total_cmp(&b.phi)));
    rows
}
