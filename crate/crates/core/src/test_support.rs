//! Fixtures shared by unit tests.

use crate::domain::{AgentProfile, BigFive, NewsPreference, Range};
use crate::recommenders::{ContentRecommender, ContentVariant, FollowRecommender, FollowVariant};

pub(crate) fn profile(name: &str) -> AgentProfile {
    AgentProfile {
        name: name.into(),
        owner: "c0".into(),
        llm_model: "mock".into(),
        age: 34,
        languages: vec!["english".into()],
        education_level: "bachelor".into(),
        political_leaning: "Green".into(),
        nationality: "Italian".into(),
        interests: vec![
            "climate".into(),
            "welfare".into(),
            "economics".into(),
            "healthcare".into(),
        ],
        big_five: BigFive::default(),
        content_recommender: ContentRecommender::new(ContentVariant::ReverseChrono, 10),
        follow_recommender: FollowRecommender::new(FollowVariant::Random, 10),
        round_actions: Range::new(1, 3),
        joined_round: 0,
        news_preference: NewsPreference::default(),
    }
}
