//! Core of the ytwin social-media digital twin.
//!
//! This crate holds everything that runs on the platform side of a
//! simulation: the shared domain types, the content and follow recommenders,
//! the RSS/Atom news catalog, the in-memory platform engine with its SQLite
//! write-through store, the JSON wire types spoken by the REST server, and
//! the analysis exporter that turns a finished store into CSV datasets.

pub mod annotations;
pub mod api;
pub mod domain;
pub mod export;
pub mod news;
pub mod platform;
pub mod recommenders;
pub mod seed;
pub mod store;
#[cfg(test)]
mod test_support;

pub use annotations::{extract_annotations, Annotations};
pub use domain::{
    AgentProfile, BigFive, Content, ContentKind, EmotionTaxonomy, FollowAction, FollowEdge, NewsPreference,
    ProfileRules, Range, Reaction, ReactionValue, RoundClock,
};
pub use platform::{
    ClientInfo, ClientRole, NewContent, Platform, PlatformError, SimulationSettings, TimelineItem, TimelineMode,
};
