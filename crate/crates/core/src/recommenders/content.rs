//! Content ranking strategies.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ContentVariant {
    Random,
    ReverseChrono,
    ReverseChronoPopularity,
    ReverseChronoFollowers,
    ReverseChronoFollowersPopularity,
}

impl ContentVariant {
    pub const ALL: [ContentVariant; 5] = [
        Self::Random,
        Self::ReverseChrono,
        Self::ReverseChronoPopularity,
        Self::ReverseChronoFollowers,
        Self::ReverseChronoFollowersPopularity,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Random => "Random",
            Self::ReverseChrono => "ReverseChrono",
            Self::ReverseChronoPopularity => "ReverseChronoPopularity",
            Self::ReverseChronoFollowers => "ReverseChronoFollowers",
            Self::ReverseChronoFollowersPopularity => "ReverseChronoFollowersPopularity",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == name)
    }

    pub fn uses_followers(&self) -> bool {
        matches!(
            self,
            Self::ReverseChronoFollowers | Self::ReverseChronoFollowersPopularity
        )
    }

    pub fn uses_popularity(&self) -> bool {
        matches!(
            self,
            Self::ReverseChronoPopularity | Self::ReverseChronoFollowersPopularity
        )
    }
}

/// How reactions turn into a popularity score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PopularityScoring {
    /// likes minus dislikes
    #[default]
    Net,
    /// likes plus dislikes
    Total,
}

fn is_zero(v: &u64) -> bool {
    *v == 0
}

fn is_zero_f(v: &f64) -> bool {
    *v == 0.0
}

/// A configured content recommender.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContentRecommender {
    pub id: ContentVariant,
    pub k: usize,
    /// Share of the `k` slots drawn from non-followees (Followers variants only).
    #[serde(default, skip_serializing_if = "is_zero_f")]
    pub non_follower_fraction: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub seed: u64,
    #[serde(default)]
    pub popularity: PopularityScoring,
}

impl ContentRecommender {
    pub fn new(id: ContentVariant, k: usize) -> Self {
        Self {
            id,
            k,
            non_follower_fraction: 0.0,
            seed: 0,
            popularity: PopularityScoring::Net,
        }
    }

    pub fn with_non_follower_fraction(mut self, f: f64) -> Self {
        self.non_follower_fraction = f;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.k == 0 {
            return Err("k must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.non_follower_fraction) {
            return Err(format!(
                "non_follower_fraction {} outside [0, 1]",
                self.non_follower_fraction
            ));
        }
        if self.non_follower_fraction != 0.0 && !self.id.uses_followers() {
            return Err(format!(
                "non_follower_fraction is only defined for Followers variants, not {}",
                self.id.name()
            ));
        }
        Ok(())
    }

    /// Slots reserved for followee content and for everyone else.
    ///
    /// `ceil(k * (1 - f)) + floor(k * f) == k`, so only the floor is computed.
    pub fn split(&self) -> (usize, usize) {
        let others = ((self.k as f64) * self.non_follower_fraction + 1e-9).floor() as usize;
        let others = others.min(self.k);
        (self.k - others, others)
    }
}

/// What a ranker needs to know about one candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate<'a> {
    pub id: u64,
    pub round: u64,
    pub author: &'a str,
    pub likes: u64,
    pub dislikes: u64,
}

impl Candidate<'_> {
    pub fn popularity(&self, scoring: PopularityScoring) -> i64 {
        match scoring {
            PopularityScoring::Net => self.likes as i64 - self.dislikes as i64,
            PopularityScoring::Total => (self.likes + self.dislikes) as i64,
        }
    }
}

fn chrono_order(a: &Candidate<'_>, b: &Candidate<'_>) -> Ordering {
    b.round.cmp(&a.round).then(b.id.cmp(&a.id))
}

fn base_order(popular: bool, scoring: PopularityScoring) -> impl Fn(&Candidate<'_>, &Candidate<'_>) -> Ordering {
    move |a, b| {
        if popular {
            b.popularity(scoring)
                .cmp(&a.popularity(scoring))
                .then_with(|| chrono_order(a, b))
        } else {
            chrono_order(a, b)
        }
    }
}

/// Ranks a visibility-filtered candidate list (own content already removed).
///
/// Returns at most `k` content ids. Random draws from the seed carried by the
/// recommender; every other variant is a total order with id as last key.
pub fn rank_content(
    candidates: &[Candidate<'_>],
    followees: &BTreeSet<String>,
    recommender: &ContentRecommender,
) -> Vec<u64> {
    let k = recommender.k;
    match recommender.id {
        ContentVariant::Random => {
            let mut sorted: Vec<&Candidate<'_>> = candidates.iter().collect();
            sorted.sort_by_key(|c| c.id);
            let mut rng = seed::rng(recommender.seed);
            let amount = k.min(sorted.len());
            index::sample(&mut rng, sorted.len(), amount)
                .into_iter()
                .map(|i| sorted[i].id)
                .collect()
        }
        ContentVariant::ReverseChrono | ContentVariant::ReverseChronoPopularity => {
            let order = base_order(recommender.id.uses_popularity(), recommender.popularity);
            let mut sorted = candidates.to_vec();
            sorted.sort_by(&order);
            sorted.into_iter().take(k).map(|c| c.id).collect()
        }
        ContentVariant::ReverseChronoFollowers | ContentVariant::ReverseChronoFollowersPopularity => {
            let order = base_order(recommender.id.uses_popularity(), recommender.popularity);
            let (mut from_followees, mut from_others): (Vec<_>, Vec<_>) =
                candidates.iter().copied().partition(|c| followees.contains(c.author));
            from_followees.sort_by(&order);
            from_others.sort_by(&order);

            let (want_followees, want_others) = recommender.split();
            let mut take_followees = want_followees.min(from_followees.len());
            let mut take_others = want_others.min(from_others.len());
            // backfill a short pool from the other one
            let spare = k - take_followees - take_others;
            let extra_others = spare.min(from_others.len() - take_others);
            take_others += extra_others;
            let spare = spare - extra_others;
            take_followees += spare.min(from_followees.len() - take_followees);

            from_followees
                .into_iter()
                .take(take_followees)
                .chain(from_others.into_iter().take(take_others))
                .map(|c| c.id)
                .collect()
        }
    }
}
