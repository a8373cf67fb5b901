//! Materialized follow graph.

use std::collections::{BTreeMap, BTreeSet};

use crate::domain::{FollowAction, FollowEdge};

static EMPTY: BTreeSet<String> = BTreeSet::new();

/// Directed follow graph plus its undirected projection.
///
/// Link-prediction scores use the projection: `neighbors(x)` is the union of
/// the agents `x` follows and the agents following `x`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FollowGraph {
    followees: BTreeMap<String, BTreeSet<String>>,
    followers: BTreeMap<String, BTreeSet<String>>,
    undirected: BTreeMap<String, BTreeSet<String>>,
}

impl FollowGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Folds an event log into a graph.
    pub fn replay<'a>(events: impl IntoIterator<Item = &'a FollowEdge>) -> Self {
        let mut g = Self::new();
        for e in events {
            g.apply(e);
        }
        g
    }

    pub fn apply(&mut self, edge: &FollowEdge) -> bool {
        match edge.action {
            FollowAction::Follow => self.follow(&edge.follower, &edge.followee),
            FollowAction::Unfollow => self.unfollow(&edge.follower, &edge.followee),
        }
    }

    /// Returns whether the edge was new.
    pub fn follow(&mut self, follower: &str, followee: &str) -> bool {
        debug_assert_ne!(follower, followee);
        let added = self
            .followees
            .entry(follower.to_string())
            .or_default()
            .insert(followee.to_string());
        if added {
            self.followers
                .entry(followee.to_string())
                .or_default()
                .insert(follower.to_string());
            self.undirected
                .entry(follower.to_string())
                .or_default()
                .insert(followee.to_string());
            self.undirected
                .entry(followee.to_string())
                .or_default()
                .insert(follower.to_string());
        }
        added
    }

    /// Returns whether an edge was removed.
    pub fn unfollow(&mut self, follower: &str, followee: &str) -> bool {
        let removed = self.followees.get_mut(follower).is_some_and(|s| s.remove(followee));
        if removed {
            if let Some(s) = self.followers.get_mut(followee) {
                s.remove(follower);
            }
            // the projection keeps the pair while the reverse edge exists
            if !self.follows(followee, follower) {
                if let Some(s) = self.undirected.get_mut(follower) {
                    s.remove(followee);
                }
                if let Some(s) = self.undirected.get_mut(followee) {
                    s.remove(follower);
                }
            }
        }
        removed
    }

    pub fn follows(&self, follower: &str, followee: &str) -> bool {
        self.followees.get(follower).is_some_and(|s| s.contains(followee))
    }

    pub fn followees(&self, agent: &str) -> &BTreeSet<String> {
        self.followees.get(agent).unwrap_or(&EMPTY)
    }

    pub fn followers(&self, agent: &str) -> &BTreeSet<String> {
        self.followers.get(agent).unwrap_or(&EMPTY)
    }

    /// Undirected neighborhood.
    pub fn neighbors(&self, agent: &str) -> &BTreeSet<String> {
        self.undirected.get(agent).unwrap_or(&EMPTY)
    }

    pub fn degree(&self, agent: &str) -> usize {
        self.neighbors(agent).len()
    }

    pub fn in_degree(&self, agent: &str) -> usize {
        self.followers(agent).len()
    }

    pub fn edge_count(&self) -> usize {
        self.followees.values().map(BTreeSet::len).sum()
    }

    /// All directed edges, ordered by (follower, followee).
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.followees
            .iter()
            .flat_map(|(a, bs)| bs.iter().map(move |b| (a.as_str(), b.as_str())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn edge(a: &str, b: &str, action: FollowAction) -> FollowEdge {
        FollowEdge {
            follower: a.into(),
            followee: b.into(),
            action,
            round: 0,
        }
    }

    #[test]
    fn follow_then_unfollow() {
        let mut g = FollowGraph::new();
        assert!(g.follow("a", "b"));
        assert!(!g.follow("a", "b"));
        assert_eq!(g.followees("a").len(), 1);
        assert!(g.unfollow("a", "b"));
        assert!(!g.follows("a", "b"));
        assert!(g.neighbors("a").is_empty());
    }

    #[test]
    fn projection_survives_one_sided_unfollow() {
        let mut g = FollowGraph::new();
        g.follow("a", "b");
        g.follow("b", "a");
        g.unfollow("a", "b");
        assert!(g.neighbors("a").contains("b"));
        assert!(g.neighbors("b").contains("a"));
        g.unfollow("b", "a");
        assert!(g.neighbors("a").is_empty());
    }

    proptest! {
        // the current graph contains (a, b) iff the latest event on (a, b) is FOLLOW
        #[test]
        fn replay_equals_latest_event_fold(
            ops in proptest::collection::vec((0u8..6, 0u8..6, any::<bool>()), 0..120)
        ) {
            let names = ["a", "b", "c", "d", "e", "f"];
            let events: Vec<FollowEdge> = ops
                .into_iter()
                .filter(|(x, y, _)| x != y)
                .map(|(x, y, f)| {
                    let action = if f { FollowAction::Follow } else { FollowAction::Unfollow };
                    edge(names[x as usize], names[y as usize], action)
                })
                .collect();
            let g = FollowGraph::replay(&events);
            let mut latest = BTreeMap::new();
            for e in &events {
                latest.insert((e.follower.clone(), e.followee.clone()), e.action);
            }
            for a in names {
                for b in names {
                    let expect = latest.get(&(a.to_string(), b.to_string())) == Some(&FollowAction::Follow);
                    prop_assert_eq!(g.follows(a, b), expect);
                    let und = g.follows(a, b) || g.follows(b, a);
                    prop_assert_eq!(g.neighbors(a).contains(b), und);
                }
            }
        }
    }
}
