//! Simulation client for the ytwin platform.
//!
//! A client owns a slice of the agent population. It parses a recipe,
//! registers its agents, and then walks the day/slot schedule in lockstep
//! with the server clock: each slot it activates a share of its agents, lets
//! each one pick and perform actions through its LLM, and reports back so
//! the orchestrating client can advance the clock.

use thiserror::Error;
use ytwin_core::PlatformError;
use ytwin_llm::LlmError;

pub mod engine;
pub mod feeds;
pub mod orchestrator;
pub mod population;
pub mod recipe;
pub mod transport;

pub use engine::{ActionKind, Engine, EngineConfig, Outcome, Turn, DAILY_MENU, HOURLY_MENU};
pub use orchestrator::{run_simulation, RunManifest, RunOptions, RunReport, SlotTrace};
pub use population::{agent_name, generate_population, sample_profile};
pub use recipe::{LoadedRecipe, Recipe};
pub use transport::{HttpTransport, LocalTransport, PlatformClient, Transport};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("server unreachable at {url}: {detail}")]
    ServerUnreachable { url: String, detail: String },
    #[error("platform: {0}")]
    Platform(#[from] PlatformError),
    #[error("clock desync: observed round {observed}, expected {expected}")]
    ClockDesync { observed: u64, expected: u64 },
    #[error("gave up waiting for {what} after {secs} s")]
    Timeout { what: String, secs: u64 },
    #[error("invalid recipe: {0}")]
    InvalidRecipe(String),
    #[error("{0}")]
    Config(String),
    #[error("unexpected reply from /{endpoint}: {detail}")]
    Protocol { endpoint: String, detail: String },
    #[error("llm: {0}")]
    Llm(#[from] LlmError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
