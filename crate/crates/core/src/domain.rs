//! Shared domain types.
//!
//! Everything here is a plain value type serialized to JSON with snake_case
//! field names; the same representation is used by the REST protocol, the
//! SQLite store (for JSON columns) and the export files.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::recommenders::{ContentRecommender, FollowRecommender};

/// Inclusive integer range as written in recipes: `{"min": 1, "max": 3}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Range {
    pub min: u64,
    pub max: u64,
}

impl Range {
    pub const fn new(min: u64, max: u64) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, value: u64) -> bool {
        self.min <= value && value <= self.max
    }

    pub fn is_valid(&self) -> bool {
        self.min <= self.max
    }
}

/// High/low flag for each of the five personality traits.
///
/// `true` selects the high pole of the trait. Five flags give 32 distinct
/// personalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct BigFive {
    pub oe: bool,
    pub co: bool,
    pub ex: bool,
    pub ag: bool,
    pub ne: bool,
}

impl BigFive {
    pub const COMBINATIONS: usize = 32;

    /// Packs the flags into `0..32`, `oe` being the lowest bit.
    pub fn index(&self) -> usize {
        [self.oe, self.co, self.ex, self.ag, self.ne]
            .iter()
            .enumerate()
            .map(|(bit, &flag)| usize::from(flag) << bit)
            .sum()
    }

    pub fn from_index(index: usize) -> Self {
        let bit = |b: usize| index & (1 << b) != 0;
        Self {
            oe: bit(0),
            co: bit(1),
            ex: bit(2),
            ag: bit(3),
            ne: bit(4),
        }
    }
}

/// Preferred news category and outlet leaning for NEWS actions.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NewsPreference {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaning: Option<String>,
}

/// One simulated user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub name: String,
    pub owner: String,
    pub llm_model: String,
    pub age: u64,
    pub languages: Vec<String>,
    pub education_level: String,
    pub political_leaning: String,
    pub nationality: String,
    pub interests: Vec<String>,
    pub big_five: BigFive,
    pub content_recommender: ContentRecommender,
    pub follow_recommender: FollowRecommender,
    pub round_actions: Range,
    #[serde(default)]
    pub joined_round: u64,
    #[serde(default)]
    pub news_preference: NewsPreference,
}

impl AgentProfile {
    /// The first listed language, used to fill `{language}` in prompts.
    pub fn primary_language(&self) -> &str {
        self.languages.first().map(String::as_str).unwrap_or("english")
    }
}

/// Population-level constraints every registered profile must satisfy.
///
/// Empty value lists accept any value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileRules {
    pub age: Range,
    pub n_interests: Range,
    #[serde(default)]
    pub education_levels: Vec<String>,
    #[serde(default)]
    pub political_leanings: Vec<String>,
}

impl Default for ProfileRules {
    fn default() -> Self {
        Self {
            age: Range::new(0, 150),
            n_interests: Range::new(1, u64::MAX),
            education_levels: Vec::new(),
            political_leanings: Vec::new(),
        }
    }
}

impl ProfileRules {
    /// Checks `profile` and names the first violated invariant.
    pub fn validate(&self, profile: &AgentProfile) -> Result<(), String> {
        if profile.name.trim().is_empty() {
            return Err("name is empty".into());
        }
        if profile.name.chars().any(char::is_whitespace) {
            return Err(format!("name {:?} contains whitespace", profile.name));
        }
        if !self.age.contains(profile.age) {
            return Err(format!(
                "age {} outside {}..={}",
                profile.age, self.age.min, self.age.max
            ));
        }
        let n = profile.interests.len() as u64;
        if n == 0 || !self.n_interests.contains(n) {
            return Err(format!(
                "{} interests outside {}..={}",
                n, self.n_interests.min, self.n_interests.max
            ));
        }
        if !self.education_levels.is_empty() && !self.education_levels.contains(&profile.education_level) {
            return Err(format!(
                "education level {:?} not in recipe list",
                profile.education_level
            ));
        }
        if !self.political_leanings.is_empty() && !self.political_leanings.contains(&profile.political_leaning) {
            return Err(format!(
                "political leaning {:?} not in recipe list",
                profile.political_leaning
            ));
        }
        if !profile.round_actions.is_valid() {
            return Err("round_actions.min > round_actions.max".into());
        }
        profile
            .content_recommender
            .validate()
            .map_err(|e| format!("content recommender: {e}"))?;
        profile
            .follow_recommender
            .validate()
            .map_err(|e| format!("follow recommender: {e}"))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ContentKind {
    Post,
    Comment,
    News,
    Share,
}

impl ContentKind {
    pub const ALL: [ContentKind; 4] = [Self::Post, Self::Comment, Self::News, Self::Share];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Post => "POST",
            Self::Comment => "COMMENT",
            Self::News => "NEWS",
            Self::Share => "SHARE",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Roots start a thread; only comments hang off a parent.
    pub fn is_root(&self) -> bool {
        !matches!(self, Self::Comment)
    }
}

impl fmt::Display for ContentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A post, comment, news post or share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Content {
    pub id: u64,
    pub author: String,
    pub kind: ContentKind,
    pub text: String,
    pub thread_root: u64,
    pub parent: Option<u64>,
    pub article: Option<u64>,
    pub shared_from: Option<u64>,
    pub round: u64,
    pub mentions: Vec<String>,
    pub hashtags: Vec<String>,
    pub emotions: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ReactionValue {
    Like,
    Dislike,
}

impl ReactionValue {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Like => "LIKE",
            Self::Dislike => "DISLIKE",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "LIKE" => Some(Self::Like),
            "DISLIKE" => Some(Self::Dislike),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reaction {
    pub agent: String,
    pub content: u64,
    pub value: ReactionValue,
    pub round: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum FollowAction {
    Follow,
    Unfollow,
}

impl FollowAction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Follow => "FOLLOW",
            Self::Unfollow => "UNFOLLOW",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "FOLLOW" => Some(Self::Follow),
            "UNFOLLOW" => Some(Self::Unfollow),
            _ => None,
        }
    }
}

/// One entry of the append-only follow log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FollowEdge {
    pub follower: String,
    pub followee: String,
    pub action: FollowAction,
    pub round: u64,
}

/// Server-authoritative discrete time: `round = day * slots + slot`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct RoundClock {
    pub day: u64,
    pub slot: u64,
    pub round: u64,
}

impl RoundClock {
    pub fn from_round(round: u64, slots: u64) -> Self {
        assert!(slots > 0, "slots must be positive");
        Self {
            day: round / slots,
            slot: round % slots,
            round,
        }
    }

    /// The clock one slot later, rolling the slot over into the next day.
    pub fn next(&self, slots: u64) -> Self {
        Self::from_round(self.round + 1, slots)
    }
}

/// Closed, ordered set of emotion labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmotionTaxonomy {
    pub labels: Vec<String>,
}

/// The 27 GoEmotions categories plus `neutral`.
pub const GO_EMOTIONS: [&str; 28] = [
    "admiration",
    "amusement",
    "anger",
    "annoyance",
    "approval",
    "caring",
    "confusion",
    "curiosity",
    "desire",
    "disappointment",
    "disapproval",
    "disgust",
    "embarrassment",
    "excitement",
    "fear",
    "gratitude",
    "grief",
    "joy",
    "love",
    "nervousness",
    "optimism",
    "pride",
    "realization",
    "relief",
    "remorse",
    "sadness",
    "surprise",
    "neutral",
];

impl Default for EmotionTaxonomy {
    fn default() -> Self {
        Self::go_emotions()
    }
}

impl EmotionTaxonomy {
    pub fn go_emotions() -> Self {
        Self::new(GO_EMOTIONS.iter().map(|s| s.to_string()))
    }

    pub fn new(labels: impl IntoIterator<Item = String>) -> Self {
        let mut seen = std::collections::HashSet::new();
        let labels = labels
            .into_iter()
            .map(|l| l.trim().to_lowercase())
            .filter(|l| !l.is_empty() && seen.insert(l.clone()))
            .collect();
        Self { labels }
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.iter().any(|l| l == label)
    }

    /// Returns the first label not in the taxonomy, if any.
    pub fn first_foreign<'a>(&self, labels: &'a [String]) -> Option<&'a str> {
        labels.iter().find(|l| !self.contains(l)).map(String::as_str)
    }
}
