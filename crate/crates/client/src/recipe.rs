//! Simulation recipes.
//!
//! The file format is the four-section JSON used by Y recipes (`servers`,
//! `simulation`, `agents`, `posts`) plus a top-level `seed`. A handful of
//! optional keys extend it; all of them default to the stock behavior.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};
use ytwin_core::recommenders::{ContentRecommender, ContentVariant, FollowRecommender, FollowVariant};
use ytwin_core::{EmotionTaxonomy, NewsPreference, ProfileRules, Range, SimulationSettings};
use ytwin_llm::{BigFiveLabels, SamplingOptions};

use crate::ClientError;

/// Stand-in circadian profile: quiet between 02:00 and 06:00, peaks at
/// 13:00 and 21:00.
pub const DEFAULT_HOURLY_ACTIVITY: [f64; 24] = [
    0.06, 0.04, 0.02, 0.015, 0.015, 0.02, 0.03, 0.05, 0.07, 0.08, 0.09, 0.10, 0.11, 0.13, 0.11, 0.10, 0.09, 0.09, 0.10,
    0.11, 0.12, 0.14, 0.12, 0.09,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recipe {
    pub servers: Servers,
    pub simulation: Simulation,
    pub agents: Agents,
    pub posts: Posts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feeds: Option<Feeds>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Servers {
    pub llm: String,
    #[serde(default = "null_key")]
    pub llm_api_key: String,
    pub api: String,
    #[serde(default)]
    pub llm_options: SamplingOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub llm_timeout: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub llm_max_retries: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub llm_max_concurrency: Option<usize>,
}

fn null_key() -> String {
    "NULL".into()
}

/// Whether the daily FOLLOW draw covers every agent or only those activated
/// at least once that day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FollowScope {
    #[default]
    All,
    Active,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    pub name: String,
    #[serde(default = "base_client")]
    pub client: String,
    pub days: u64,
    pub slots: u64,
    pub starting_agents: u64,
    #[serde(default)]
    pub new_agents_per_iteration: u64,
    /// Keyed by slot index as a string (`"0"`, `"1"`, ...).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hourly_activity: Option<BTreeMap<String, f64>>,
    #[serde(default)]
    pub daily_follow_scope: FollowScope,
}

fn base_client() -> String {
    "YClientBase".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommenderSpec {
    pub id: String,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaning_bias: Option<f64>,
}

fn default_k() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agents {
    pub education_levels: Vec<String>,
    pub languages: Vec<String>,
    pub max_length_thread_reading: usize,
    pub reading_from_follower_ratio: f64,
    pub political_leanings: Vec<String>,
    pub age: Range,
    pub round_actions: Range,
    pub nationalities: Vec<String>,
    pub probability_of_daily_follow: f64,
    pub llm_agents: Vec<String>,
    pub n_interests: Range,
    pub interests: Vec<String>,
    #[serde(default)]
    pub big_five: BigFiveLabels,
    #[serde(default = "default_content_rec")]
    pub content_recommender: RecommenderSpec,
    #[serde(default = "default_follow_rec")]
    pub follow_recommender: RecommenderSpec,
    /// Candidate NEWS preferences; each agent draws one. Empty means none.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub news_preferences: Vec<NewsPreference>,
}

fn default_content_rec() -> RecommenderSpec {
    RecommenderSpec {
        id: "ReverseChronoFollowersPopularity".into(),
        k: default_k(),
        leaning_bias: None,
    }
}

fn default_follow_rec() -> RecommenderSpec {
    RecommenderSpec {
        id: "PreferentialAttachment".into(),
        k: default_k(),
        leaning_bias: None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posts {
    pub visibility_rounds: u64,
    #[serde(default = "go_emotions", deserialize_with = "emotion_labels")]
    pub emotions: Vec<String>,
}

fn go_emotions() -> Vec<String> {
    EmotionTaxonomy::go_emotions().labels
}

/// Emotions are written either as a list or as a `{label: anything}` map.
fn emotion_labels<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Form {
        List(Vec<String>),
        Map(BTreeMap<String, serde_json::Value>),
    }
    Ok(match Form::deserialize(d)? {
        Form::List(v) => v,
        Form::Map(m) => m.into_keys().collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feeds {
    pub catalog: PathBuf,
    /// Read feed documents from this directory instead of fetching them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from_dir: Option<PathBuf>,
}

/// A parsed recipe together with the hash of the bytes it came from.
#[derive(Debug, Clone)]
pub struct LoadedRecipe {
    pub recipe: Recipe,
    pub hash: String,
    /// Directory relative paths in the recipe resolve against.
    pub base_dir: PathBuf,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Recipe {
    pub fn from_json(text: &str) -> Result<Self, ClientError> {
        let recipe: Recipe = serde_json::from_str(text).map_err(|e| ClientError::InvalidRecipe(e.to_string()))?;
        recipe.validate()?;
        Ok(recipe)
    }

    pub fn load(path: &Path) -> Result<LoadedRecipe, ClientError> {
        let bytes = std::fs::read(path)?;
        let text = String::from_utf8(bytes.clone()).map_err(|e| ClientError::InvalidRecipe(e.to_string()))?;
        let recipe = Self::from_json(&text)?;
        Ok(LoadedRecipe {
            recipe,
            hash: sha256_hex(&bytes),
            base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
        })
    }

    /// Activity fraction for every slot, index = slot.
    pub fn hourly_activity(&self) -> Vec<f64> {
        match &self.simulation.hourly_activity {
            Some(map) => (0..self.simulation.slots)
                .map(|s| map.get(&s.to_string()).copied().unwrap_or(0.0))
                .collect(),
            None => DEFAULT_HOURLY_ACTIVITY.to_vec(),
        }
    }

    pub fn total_rounds(&self) -> u64 {
        self.simulation.days * self.simulation.slots
    }

    pub fn content_recommender(&self) -> Result<ContentRecommender, ClientError> {
        let spec = &self.agents.content_recommender;
        let id = ContentVariant::parse(&spec.id)
            .ok_or_else(|| ClientError::InvalidRecipe(format!("unknown content recommender {:?}", spec.id)))?;
        let mut rec = ContentRecommender::new(id, spec.k);
        if id.uses_followers() {
            // the recipe gives the followee share; the ranker wants the rest
            rec = rec.with_non_follower_fraction(1.0 - self.agents.reading_from_follower_ratio);
        }
        rec.validate().map_err(ClientError::InvalidRecipe)?;
        Ok(rec)
    }

    pub fn follow_recommender(&self) -> Result<FollowRecommender, ClientError> {
        let spec = &self.agents.follow_recommender;
        let id = FollowVariant::parse(&spec.id)
            .ok_or_else(|| ClientError::InvalidRecipe(format!("unknown follow recommender {:?}", spec.id)))?;
        let mut rec = FollowRecommender::new(id, spec.k);
        if let Some(b) = spec.leaning_bias {
            rec = rec.with_leaning_bias(b);
        }
        rec.validate().map_err(ClientError::InvalidRecipe)?;
        Ok(rec)
    }

    /// Settings the orchestrator registers on the server.
    pub fn settings(&self) -> SimulationSettings {
        SimulationSettings {
            name: self.simulation.name.clone(),
            slots: self.simulation.slots,
            visibility_rounds: self.posts.visibility_rounds,
            emotions: EmotionTaxonomy::new(self.posts.emotions.iter().cloned()),
            profile_rules: ProfileRules {
                age: self.agents.age,
                n_interests: self.agents.n_interests,
                education_levels: self.agents.education_levels.clone(),
                political_leanings: self.agents.political_leanings.clone(),
            },
        }
    }

    pub fn validate(&self) -> Result<(), ClientError> {
        let bad = |m: String| Err(ClientError::InvalidRecipe(m));
        let sim = &self.simulation;
        let ag = &self.agents;
        if sim.days < 1 {
            return bad("simulation.days must be at least 1".into());
        }
        if sim.slots < 1 {
            return bad("simulation.slots must be at least 1".into());
        }
        if sim.starting_agents < 1 {
            return bad("simulation.starting_agents must be at least 1".into());
        }
        match &sim.hourly_activity {
            Some(map) => {
                for s in 0..sim.slots {
                    match map.get(&s.to_string()) {
                        None => return bad(format!("hourly_activity has no entry for slot {s}")),
                        Some(f) if !(0.0..=1.0).contains(f) => {
                            return bad(format!("hourly_activity[{s}] = {f} outside [0, 1]"))
                        }
                        _ => {}
                    }
                }
                if let Some(extra) = map.keys().find(|k| k.parse::<u64>().map_or(true, |s| s >= sim.slots)) {
                    return bad(format!("hourly_activity key {extra:?} is not a slot"));
                }
            }
            None if sim.slots != 24 => return bad("hourly_activity is required unless slots = 24".into()),
            None => {}
        }
        for (name, r) in [
            ("age", ag.age),
            ("round_actions", ag.round_actions),
            ("n_interests", ag.n_interests),
        ] {
            if !r.is_valid() {
                return bad(format!("agents.{name}: min {} > max {}", r.min, r.max));
            }
        }
        if ag.n_interests.min < 1 {
            return bad("agents.n_interests.min must be at least 1".into());
        }
        if (ag.interests.len() as u64) < ag.n_interests.min {
            return bad(format!(
                "agents.interests lists {} topics, fewer than n_interests.min = {}",
                ag.interests.len(),
                ag.n_interests.min
            ));
        }
        for (name, list) in [
            ("education_levels", &ag.education_levels),
            ("languages", &ag.languages),
            ("political_leanings", &ag.political_leanings),
            ("nationalities", &ag.nationalities),
            ("llm_agents", &ag.llm_agents),
        ] {
            if list.is_empty() {
                return bad(format!("agents.{name} is empty"));
            }
        }
        for (name, p) in [
            ("reading_from_follower_ratio", ag.reading_from_follower_ratio),
            ("probability_of_daily_follow", ag.probability_of_daily_follow),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("agents.{name} = {p} outside [0, 1]"));
            }
        }
        if ag.max_length_thread_reading < 1 {
            return bad("agents.max_length_thread_reading must be at least 1".into());
        }
        if self.posts.emotions.is_empty() {
            return bad("posts.emotions is empty".into());
        }
        self.content_recommender()?;
        self.follow_recommender()?;
        Ok(())
    }
}
