//! Follow suggestions: link-prediction scorers and the shortlist.

use std::cmp::Ordering;

use rand::seq::index;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::graph::FollowGraph;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FollowVariant {
    Random,
    CommonNeighbours,
    Jaccard,
    AdamicAdar,
    PreferentialAttachment,
}

impl FollowVariant {
    pub const ALL: [FollowVariant; 5] = [
        Self::Random,
        Self::CommonNeighbours,
        Self::Jaccard,
        Self::AdamicAdar,
        Self::PreferentialAttachment,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Random => "Random",
            Self::CommonNeighbours => "CommonNeighbours",
            Self::Jaccard => "Jaccard",
            Self::AdamicAdar => "AdamicAdar",
            Self::PreferentialAttachment => "PreferentialAttachment",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == name)
    }
}

fn is_zero(v: &u64) -> bool {
    *v == 0
}

fn is_zero_f(v: &f64) -> bool {
    *v == 0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FollowRecommender {
    pub id: FollowVariant,
    pub k: usize,
    /// Extra weight given to candidates sharing the target's political leaning.
    #[serde(default, skip_serializing_if = "is_zero_f")]
    pub leaning_bias: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub seed: u64,
}

impl FollowRecommender {
    pub fn new(id: FollowVariant, k: usize) -> Self {
        Self {
            id,
            k,
            leaning_bias: 0.0,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_leaning_bias(mut self, bias: f64) -> Self {
        self.leaning_bias = bias;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.k == 0 {
            return Err("k must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.leaning_bias) {
            return Err(format!("leaning_bias {} outside [0, 1]", self.leaning_bias));
        }
        Ok(())
    }
}

/// Link-prediction score of `b` as a contact for `a` on the undirected projection.
///
/// Random has no score and yields 0.
pub fn score_follow(graph: &FollowGraph, a: &str, b: &str, variant: FollowVariant) -> f64 {
    let ga = graph.neighbors(a);
    let gb = graph.neighbors(b);
    match variant {
        FollowVariant::Random => 0.0,
        FollowVariant::CommonNeighbours => ga.intersection(gb).count() as f64,
        FollowVariant::Jaccard => {
            let shared = ga.intersection(gb).count();
            let union = ga.len() + gb.len() - shared;
            if union == 0 {
                0.0
            } else {
                shared as f64 / union as f64
            }
        }
        // summed in ascending name order; degree <= 1 neighbors would divide by ln 1 = 0
        FollowVariant::AdamicAdar => ga
            .intersection(gb)
            .map(|z| graph.degree(z))
            .filter(|&d| d > 1)
            // fold from +0.0: an empty f64 sum is -0.0
            .fold(0.0, |acc, d| acc + 1.0 / (d as f64).ln()),
        FollowVariant::PreferentialAttachment => (ga.len() * gb.len()) as f64,
    }
}

/// An agent eligible for suggestion, with the leaning used for homophily bias.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Eligible<'a> {
    pub name: &'a str,
    pub leaning: &'a str,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub name: String,
    pub score: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FollowError {
    #[error("no eligible follow candidates for {0}")]
    EmptyPool(String),
}

/// Builds the follow shortlist for `agent`.
///
/// The pool is `population` minus the agent and its current followees. The
/// top `k` by score (name ascending on ties) are kept, or a seeded sample for
/// Random. Scores become probabilities by normalization, uniform when every
/// score is zero; a positive `leaning_bias` then multiplies same-leaning
/// candidates by `1 + bias` before renormalizing.
pub fn shortlist_follow(
    graph: &FollowGraph,
    agent: &str,
    agent_leaning: &str,
    population: &[Eligible<'_>],
    recommender: &FollowRecommender,
) -> Result<Vec<Suggestion>, FollowError> {
    let followees = graph.followees(agent);
    let mut pool: Vec<Eligible<'_>> = population
        .iter()
        .copied()
        .filter(|e| e.name != agent && !followees.contains(e.name))
        .collect();
    if pool.is_empty() {
        return Err(FollowError::EmptyPool(agent.to_string()));
    }
    pool.sort_by(|a, b| a.name.cmp(b.name));
    pool.dedup_by(|a, b| a.name == b.name);

    let k = recommender.k;
    let mut scored: Vec<(Eligible<'_>, f64)> = match recommender.id {
        FollowVariant::Random => {
            let mut rng = seed::rng(recommender.seed);
            index::sample(&mut rng, pool.len(), k.min(pool.len()))
                .into_iter()
                .map(|i| (pool[i], 0.0))
                .collect()
        }
        variant => {
            let mut all: Vec<_> = pool
                .iter()
                .map(|e| (*e, score_follow(graph, agent, e.name, variant)))
                .collect();
            all.sort_by(|(ea, sa), (eb, sb)| {
                sb.partial_cmp(sa)
                    .unwrap_or(Ordering::Equal)
                    .then_with(|| ea.name.cmp(eb.name))
            });
            all.truncate(k);
            all
        }
    };

    let total: f64 = scored.iter().map(|(_, s)| s).sum();
    let mut weights: Vec<f64> = if total > 0.0 {
        scored.iter().map(|(_, s)| s / total).collect()
    } else {
        vec![1.0 / scored.len() as f64; scored.len()]
    };
    if recommender.leaning_bias > 0.0 {
        for (w, (e, _)) in weights.iter_mut().zip(&scored) {
            if e.leaning == agent_leaning {
                *w *= 1.0 + recommender.leaning_bias;
            }
        }
        let z: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= z;
        }
    }

    Ok(scored
        .drain(..)
        .zip(weights)
        .map(|((e, score), probability)| Suggestion {
            name: e.name.to_string(),
            score,
            probability,
        })
        .collect())
}

/// Draws one suggestion proportionally to its probability.
pub fn pick_suggestion<'a, R: rand::Rng + ?Sized>(shortlist: &'a [Suggestion], rng: &mut R) -> Option<&'a Suggestion> {
    if shortlist.is_empty() {
        return None;
    }
    let u: f64 = rng.random::<f64>();
    let mut acc = 0.0;
    for s in shortlist {
        acc += s.probability;
        if u < acc {
            return Some(s);
        }
    }
    shortlist.last()
}
