//! Synthetic agent populations sampled from a recipe.
//!
//! Agent number `g` (0-based, counted over the whole simulation) always gets
//! the same profile for a given seed, whichever client ends up owning it.
//! The index is baked into the name, which keeps names unique without any
//! coordination between clients.

use rand::seq::IndexedRandom;
use rand::Rng;
use ytwin_core::{seed, AgentProfile, BigFive, NewsPreference};

use crate::recipe::Recipe;
use crate::ClientError;

const FIRST: &[&str] = &[
    "alice", "bruno", "chiara", "dario", "elena", "fabio", "giulia", "hugo", "irene", "jonas", "katia", "luca",
    "marta", "nadia", "oscar", "paola", "quentin", "rosa", "sara", "tomas", "ugo", "vera", "walter", "xenia", "yara",
    "zeno", "amir", "bea", "carlos", "dana", "emil", "farah", "gina", "hana", "ivan", "jade", "kofi", "lena", "mateo",
    "nora",
];

const LAST: &[&str] = &[
    "rossi", "smith", "garcia", "muller", "kowalski", "dubois", "jensen", "silva", "novak", "ivanova", "tanaka",
    "okafor", "haddad", "larsen", "costa", "moreau", "bianchi", "fischer", "nowak", "santos", "berg", "ricci", "weber",
    "khan", "lopez", "evans", "park", "mori", "russo", "ferrari",
];

fn pick<R: Rng>(rng: &mut R, list: &[String]) -> String {
    list.choose(rng).cloned().unwrap_or_default()
}

/// Deterministic, unique name of agent number `index`.
pub fn agent_name(master: u64, index: u64) -> String {
    let mut rng = seed::stream(master, &["name", &index.to_string()]);
    let first = FIRST.choose(&mut rng).expect("non-empty");
    let last = LAST.choose(&mut rng).expect("non-empty");
    format!("{first}_{last}{index}")
}

/// The profile of agent number `index`, owned by `owner`.
pub fn sample_profile(
    recipe: &Recipe,
    index: u64,
    owner: &str,
    joined_round: u64,
) -> Result<AgentProfile, ClientError> {
    let ag = &recipe.agents;
    let mut rng = seed::stream(recipe.seed, &["profile", &index.to_string()]);

    let age = rng.random_range(ag.age.min..=ag.age.max);
    let n = rng
        .random_range(ag.n_interests.min..=ag.n_interests.max)
        .min(ag.interests.len() as u64) as usize;
    let interests: Vec<String> = ag.interests.choose_multiple(&mut rng, n).cloned().collect();
    let big_five = BigFive {
        oe: rng.random_bool(0.5),
        co: rng.random_bool(0.5),
        ex: rng.random_bool(0.5),
        ag: rng.random_bool(0.5),
        ne: rng.random_bool(0.5),
    };
    let news_preference = ag
        .news_preferences
        .choose(&mut rng)
        .cloned()
        .unwrap_or_else(NewsPreference::default);
    Ok(AgentProfile {
        name: agent_name(recipe.seed, index),
        owner: owner.to_string(),
        llm_model: pick(&mut rng, &ag.llm_agents),
        age,
        languages: vec![pick(&mut rng, &ag.languages)],
        education_level: pick(&mut rng, &ag.education_levels),
        political_leaning: pick(&mut rng, &ag.political_leanings),
        nationality: pick(&mut rng, &ag.nationalities),
        interests,
        big_five,
        content_recommender: recipe.content_recommender()?,
        follow_recommender: recipe.follow_recommender()?,
        round_actions: ag.round_actions,
        joined_round,
        news_preference,
    })
}

/// Profiles for agent numbers `first .. first + n`.
pub fn generate_population(
    recipe: &Recipe,
    first: u64,
    n: u64,
    owner: &str,
    joined_round: u64,
) -> Result<Vec<AgentProfile>, ClientError> {
    (first..first + n)
        .map(|g| sample_profile(recipe, g, owner, joined_round))
        .collect()
}

/// Which of `clients` clients owns agent number `index`.
pub fn shard_of(index: u64, clients: u64) -> u64 {
    index % clients.max(1)
}
