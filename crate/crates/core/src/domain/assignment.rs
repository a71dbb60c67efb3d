use std::collections::HashSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use super::AgentId;
use crate::error::{Error, Result};
use crate::seed::{self, tag, StreamRng};

const LAYER_ATTEMPTS: usize = 64;
const RESTARTS: usize = 8;

/// An m-regular review assignment: every agent reviews `m` others and every
/// proposal is reviewed by `m` others.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReviewAssignment {
    n: usize,
    m: usize,
    reviews: Vec<Vec<AgentId>>,
    boards: Vec<Vec<AgentId>>,
}

impl ReviewAssignment {
    /// Builds an assignment from each agent's review bundle (index `i` holds
    /// the proposals agent `i + 1` reviews) and checks every invariant.
    pub fn from_reviews(reviews: Vec<Vec<AgentId>>) -> Result<Self> {
        let n = reviews.len();
        let m = reviews.first().map_or(0, Vec::len);
        if n < 2 || m == 0 {
            return Err(Error::InfeasibleAssignment(format!("n = {n}, m = {m}")));
        }
        let mut boards = vec![Vec::with_capacity(m); n];
        let mut reviews = reviews;
        for (idx, bundle) in reviews.iter_mut().enumerate() {
            let reviewer = AgentId::from_index(idx);
            if bundle.len() != m {
                return Err(Error::InfeasibleAssignment(format!(
                    "agent {reviewer} reviews {} proposals, expected {m}",
                    bundle.len()
                )));
            }
            bundle.sort();
            if bundle.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InfeasibleAssignment(format!(
                    "agent {reviewer} reviews a proposal twice"
                )));
            }
            for &p in bundle.iter() {
                if p == reviewer {
                    return Err(Error::InfeasibleAssignment(format!(
                        "agent {reviewer} reviews itself"
                    )));
                }
                if p.0 == 0 || p.index() >= n {
                    return Err(Error::InfeasibleAssignment(format!(
                        "agent {reviewer} reviews unknown agent {p}"
                    )));
                }
                boards[p.index()].push(reviewer);
            }
        }
        if let Some((idx, b)) = boards.iter().enumerate().find(|(_, b)| b.len() != m) {
            return Err(Error::InfeasibleAssignment(format!(
                "proposal {} has {} reviewers, expected {m}",
                AgentId::from_index(idx),
                b.len()
            )));
        }
        Ok(ReviewAssignment { n, m, reviews, boards })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// A(i): the proposals agent `i` reviews, sorted by id.
    pub fn reviews_of(&self, agent: AgentId) -> &[AgentId] {
        &self.reviews[agent.index()]
    }

    /// A⁻¹(i): the board reviewing proposal `i`, sorted by id.
    pub fn board_of(&self, proposal: AgentId) -> &[AgentId] {
        &self.boards[proposal.index()]
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> + Clone {
        AgentId::all(self.n)
    }

    pub fn is_assigned(&self, reviewer: AgentId, proposal: AgentId) -> bool {
        self.reviews_of(reviewer).binary_search(&proposal).is_ok()
    }
}

/// An assignment whose agents are split into equal clusters, with every
/// review crossing a cluster boundary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusteredAssignment {
    pub assignment: ReviewAssignment,
    cluster_of: Vec<usize>,
    clusters: usize,
}

impl ClusteredAssignment {
    pub fn new(assignment: ReviewAssignment, cluster_of: Vec<usize>) -> Result<Self> {
        if cluster_of.len() != assignment.n() {
            return Err(Error::InfeasibleAssignment("cluster labels do not cover n".into()));
        }
        let clusters = cluster_of.iter().max().map_or(0, |&c| c + 1);
        for reviewer in assignment.agents() {
            for &p in assignment.reviews_of(reviewer) {
                if cluster_of[p.index()] == cluster_of[reviewer.index()] {
                    return Err(Error::InfeasibleAssignment(format!(
                        "agent {reviewer} reviews {p} inside its own cluster"
                    )));
                }
            }
        }
        Ok(ClusteredAssignment { assignment, cluster_of, clusters })
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn cluster_of(&self, agent: AgentId) -> usize {
        self.cluster_of[agent.index()]
    }

    pub fn members(&self, cluster: usize) -> impl Iterator<Item = AgentId> + '_ {
        self.assignment.agents().filter(move |&a| self.cluster_of(a) == cluster)
    }
}

/// Superposes `m` random circulant layers. Each layer lays agents out in
/// a random arrangement and links position `t` to position `t + o`, which
/// is a derangement adding exactly one in- and out-edge per agent. Layers
/// that would duplicate an edge are rejected; if that keeps failing, all
/// layers are taken from one arrangement with distinct offsets, which can
/// never collide.
fn layered<F>(n: usize, m: usize, rng: &mut StreamRng, offsets: &[usize], arrange: F) -> Vec<Vec<AgentId>>
where
    F: Fn(&mut StreamRng) -> Vec<AgentId>,
{
    for _ in 0..RESTARTS {
        let mut edges: Vec<HashSet<AgentId>> = vec![HashSet::with_capacity(m); n];
        let mut layers = 0;
        let mut attempts = 0;
        while layers < m && attempts < LAYER_ATTEMPTS {
            attempts += 1;
            let order = arrange(rng);
            let o = offsets[rng.random_range(0..offsets.len())];
            let clash = (0..n).any(|t| edges[order[t].index()].contains(&order[(t + o) % n]));
            if clash {
                continue;
            }
            for t in 0..n {
                edges[order[t].index()].insert(order[(t + o) % n]);
            }
            layers += 1;
        }
        if layers == m {
            return edges.into_iter().map(|s| s.into_iter().collect()).collect();
        }
    }
    let order = arrange(rng);
    let chosen: Vec<usize> = offsets.choose_multiple(rng, m).copied().collect();
    let mut reviews = vec![Vec::with_capacity(m); n];
    for t in 0..n {
        for &o in &chosen {
            reviews[order[t].index()].push(order[(t + o) % n]);
        }
    }
    reviews
}

/// Generates a random m-regular assignment over `n` agents.
pub fn generate_assignment(n: usize, m: usize, seed: u64) -> Result<ReviewAssignment> {
    if m < 1 || m >= n {
        return Err(Error::InfeasibleAssignment(format!(
            "m-regularity needs 1 <= m <= n - 1 (n = {n}, m = {m})"
        )));
    }
    let mut rng = seed::substream(seed, &[tag::ASSIGNMENT]);
    let offsets: Vec<usize> = (1..n).collect();
    let reviews = layered(n, m, &mut rng, &offsets, |rng| {
        let mut order: Vec<AgentId> = AgentId::all(n).collect();
        order.shuffle(rng);
        order
    });
    ReviewAssignment::from_reviews(reviews)
}

/// Generates a random assignment over `clusters` equal clusters where each
/// agent only reviews agents from other clusters.
pub fn generate_clustered_assignment(
    n: usize,
    m: usize,
    clusters: usize,
    seed: u64,
) -> Result<ClusteredAssignment> {
    if clusters < 2 || !n.is_multiple_of(clusters) {
        return Err(Error::InfeasibleAssignment(format!(
            "{n} agents cannot be split into {clusters} equal clusters"
        )));
    }
    let size = n / clusters;
    if m < 1 || m > n - size {
        return Err(Error::InfeasibleAssignment(format!(
            "m = {m} needs 1 <= m <= {} with clusters of {size}",
            n - size
        )));
    }
    let mut rng = seed::substream(seed, &[tag::CLUSTERS]);
    let mut shuffled: Vec<AgentId> = AgentId::all(n).collect();
    shuffled.shuffle(&mut rng);
    let mut cluster_of = vec![0; n];
    let groups: Vec<Vec<AgentId>> = shuffled.chunks(size).map(<[AgentId]>::to_vec).collect();
    for (c, g) in groups.iter().enumerate() {
        for a in g {
            cluster_of[a.index()] = c;
        }
    }
    // Interleaving clusters puts position t in cluster t mod clusters, so any
    // offset that is not a multiple of `clusters` crosses a boundary.
    let offsets: Vec<usize> = (1..n).filter(|o| o % clusters != 0).collect();
    let reviews = layered(n, m, &mut rng, &offsets, |rng| {
        let mut groups = groups.clone();
        for g in groups.iter_mut() {
            g.shuffle(rng);
        }
        (0..n).map(|t| groups[t % clusters][t / clusters]).collect()
    });
    ClusteredAssignment::new(ReviewAssignment::from_reviews(reviews)?, cluster_of)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_regular(a: &ReviewAssignment) {
        for i in a.agents() {
            assert_eq!(a.reviews_of(i).len(), a.m());
            assert_eq!(a.board_of(i).len(), a.m());
            assert!(!a.reviews_of(i).contains(&i));
            for &p in a.reviews_of(i) {
                assert!(a.board_of(p).contains(&i));
            }
        }
    }

    #[test]
    fn complete_assignment_is_forced() {
        for seed in 0..20 {
            let a = generate_assignment(4, 3, seed).unwrap();
            for i in a.agents() {
                let others: Vec<AgentId> = a.agents().filter(|&j| j != i).collect();
                assert_eq!(a.reviews_of(i), &others[..]);
            }
        }
    }

    #[test]
    fn regular_at_full_scale() {
        for m in [3, 4, 6, 9] {
            let a = generate_assignment(120, m, 7).unwrap();
            assert_regular(&a);
        }
    }

    #[test]
    fn infeasible_sizes_rejected() {
        assert!(generate_assignment(3, 3, 0).is_err());
        assert!(generate_assignment(5, 0, 0).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(generate_assignment(30, 4, 11).unwrap(), generate_assignment(30, 4, 11).unwrap());
        assert_ne!(generate_assignment(30, 4, 11).unwrap(), generate_assignment(30, 4, 12).unwrap());
    }

    #[test]
    fn dense_assignments_complete() {
        for n in 4..12 {
            for seed in 0..5 {
                assert_regular(&generate_assignment(n, n - 1, seed).unwrap());
                assert_regular(&generate_assignment(n, n - 2, seed).unwrap());
            }
        }
    }

    #[test]
    fn clustered_reviews_cross_clusters() {
        let c = generate_clustered_assignment(120, 6, 4, 3).unwrap();
        assert_regular(&c.assignment);
        for c_idx in 0..4 {
            assert_eq!(c.members(c_idx).count(), 30);
        }
        let small = generate_clustered_assignment(4, 2, 2, 1).unwrap();
        assert_regular(&small.assignment);
        assert!(generate_clustered_assignment(10, 3, 3, 0).is_err());
        assert!(generate_clustered_assignment(4, 3, 2, 0).is_err());
    }

    #[test]
    fn from_reviews_validates() {
        let ok = vec![vec![AgentId(2)], vec![AgentId(1)]];
        assert!(ReviewAssignment::from_reviews(ok).is_ok());
        let selfish = vec![vec![AgentId(1)], vec![AgentId(1)]];
        assert!(ReviewAssignment::from_reviews(selfish).is_err());
        let irregular = vec![vec![AgentId(2)], vec![AgentId(3)], vec![AgentId(2)]];
        assert!(ReviewAssignment::from_reviews(irregular).is_err());
    }
}
