//! Content rankers and follow-suggestion scorers.
//!
//! Recommender ids used in recipes and requests are the variant names:
//! `Random`, `ReverseChrono`, `ReverseChronoPopularity`,
//! `ReverseChronoFollowers`, `ReverseChronoFollowersPopularity` for content
//! and `Random`, `CommonNeighbours`, `Jaccard`, `AdamicAdar`,
//! `PreferentialAttachment` for follows.

mod content;
mod follow;
mod graph;

pub use content::{rank_content, Candidate, ContentRecommender, ContentVariant, PopularityScoring};
pub use follow::{
    pick_suggestion, score_follow, shortlist_follow, Eligible, FollowError, FollowRecommender, FollowVariant,
    Suggestion,
};
pub use graph::FollowGraph;

/// Gini coefficient of a non-negative sample (0 = perfectly even).
pub fn gini(values: &[u64]) -> f64 {
    let n = values.len();
    let total: u64 = values.iter().sum();
    if n == 0 || total == 0 {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| (i as f64 + 1.0) * v as f64)
        .sum();
    let n = n as f64;
    (2.0 * weighted) / (n * total as f64) - (n + 1.0) / n
}
