use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A 1-based agent identifier. In simulations the id doubles as the agent's
/// true quality rank, so agent 1 is the best.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub u32);

impl AgentId {
    pub fn new(id: u32) -> Self {
        debug_assert!(id >= 1, "agent ids are 1-based");
        AgentId(id)
    }

    pub fn from_index(index: usize) -> Self {
        AgentId(index as u32 + 1)
    }

    /// 0-based position for vector indexing.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn all(n: usize) -> impl Iterator<Item = AgentId> + Clone {
        (1..=n as u32).map(AgentId)
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A strict ranking, best first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<AgentId>", into = "Vec<AgentId>")]
pub struct Ranking(Vec<AgentId>);

impl Ranking {
    pub fn new(order: Vec<AgentId>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(order.len());
        for &a in &order {
            if a.0 == 0 {
                return Err(Error::InvalidRanking("agent id 0 (ids are 1-based)".into()));
            }
            if !seen.insert(a) {
                return Err(Error::InvalidRanking(format!("agent {a} appears twice")));
            }
        }
        Ok(Ranking(order))
    }

    pub(crate) fn new_unchecked(order: Vec<AgentId>) -> Self {
        Ranking(order)
    }

    /// The identity order over `1..=n` without `excluded`.
    pub fn identity_without(n: usize, excluded: Option<AgentId>) -> Self {
        Ranking(AgentId::all(n).filter(|&a| Some(a) != excluded).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[AgentId] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, a: AgentId) -> bool {
        self.0.contains(&a)
    }

    /// 1-based position of `a`.
    pub fn rank(&self, a: AgentId) -> Option<usize> {
        self.0.iter().position(|&x| x == a).map(|p| p + 1)
    }

    /// Keeps only the agents in `subset`, preserving order.
    pub fn restricted_to(&self, subset: &[AgentId]) -> Ranking {
        Ranking(self.0.iter().copied().filter(|a| subset.contains(a)).collect())
    }

    /// Rank of `a` among `subset` under this order, or `None` if the
    /// ranking does not cover all of `subset`.
    pub fn rank_within(&self, a: AgentId, subset: &[AgentId]) -> Option<usize> {
        let mut rank = None;
        let mut covered = 0;
        for (pos, x) in self.0.iter().filter(|x| subset.contains(x)).enumerate() {
            covered += 1;
            if *x == a {
                rank = Some(pos + 1);
            }
        }
        if covered == subset.len() {
            rank
        } else {
            None
        }
    }

    pub fn into_vec(self) -> Vec<AgentId> {
        self.0
    }
}

impl TryFrom<Vec<AgentId>> for Ranking {
    type Error = Error;

    fn try_from(v: Vec<AgentId>) -> Result<Self> {
        Ranking::new(v)
    }
}

impl From<Ranking> for Vec<AgentId> {
    fn from(r: Ranking) -> Self {
        r.0
    }
}

/// One ranking per agent. Agent `i`'s ranking never contains `i`; its
/// domain is either everyone else or just the agent's review bundle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Profile {
    rankings: Vec<Ranking>,
}

impl Profile {
    pub fn new(rankings: Vec<Ranking>) -> Result<Self> {
        let n = rankings.len();
        for (idx, r) in rankings.iter().enumerate() {
            let owner = AgentId::from_index(idx);
            if r.contains(owner) {
                return Err(Error::InvalidProfile(format!("agent {owner} ranks itself")));
            }
            if let Some(bad) = r.iter().find(|a| a.index() >= n) {
                return Err(Error::InvalidProfile(format!(
                    "agent {owner} ranks unknown agent {bad} (n = {n})"
                )));
            }
        }
        Ok(Profile { rankings })
    }

    pub fn n(&self) -> usize {
        self.rankings.len()
    }

    pub fn ranking(&self, agent: AgentId) -> &Ranking {
        &self.rankings[agent.index()]
    }

    pub fn rankings(&self) -> &[Ranking] {
        &self.rankings
    }

    /// A copy with `agent`'s ranking replaced.
    pub fn with_ranking(&self, agent: AgentId, ranking: Ranking) -> Result<Profile> {
        let mut rankings = self.rankings.clone();
        rankings[agent.index()] = ranking;
        Profile::new(rankings)
    }

    /// The mechanism view: each ranking restricted to the agent's bundle.
    pub fn restricted(&self, assignment: &super::ReviewAssignment) -> Profile {
        let rankings = AgentId::all(self.n())
            .map(|a| self.ranking(a).restricted_to(assignment.reviews_of(a)))
            .collect();
        Profile { rankings }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<AgentId> {
        v.iter().map(|&x| AgentId(x)).collect()
    }

    #[test]
    fn rejects_repeats() {
        assert!(Ranking::new(ids(&[1, 2, 1])).is_err());
        assert!(Ranking::new(ids(&[0, 2])).is_err());
    }

    #[test]
    fn rank_within_subset() {
        let r = Ranking::new(ids(&[5, 3, 1, 4, 2])).unwrap();
        assert_eq!(r.rank(AgentId(1)), Some(3));
        assert_eq!(r.rank_within(AgentId(1), &ids(&[1, 2, 4])), Some(1));
        assert_eq!(r.rank_within(AgentId(2), &ids(&[1, 2, 4])), Some(3));
        assert_eq!(r.rank_within(AgentId(2), &ids(&[2, 6])), None);
    }

    #[test]
    fn profile_rejects_self_ranking() {
        let r1 = Ranking::new(ids(&[2])).unwrap();
        let r2 = Ranking::new(ids(&[2])).unwrap();
        assert!(Profile::new(vec![r1, r2]).is_err());
    }
}
