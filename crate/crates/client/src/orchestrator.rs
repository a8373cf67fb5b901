//! The simulation loop.
//!
//! For each day and slot the client syncs with the server clock, activates
//! `int(len(agents) * hourly_activity[slot])` of its agents and lets each
//! perform its drawn number of actions. After the day's last slot comes the
//! daily follow phase and population growth, and then the slot is closed.
//!
//! Closing a slot is the barrier: workers report `slot_done` and wait for the
//! clock to move; the orchestrator calls `advance_slot` until every client
//! has reported. After the final slot the orchestrator advances once more,
//! so a finished run leaves the clock at `days * slots`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use ytwin_core::{seed, AgentProfile, ClientRole, PlatformError, RoundClock};
use ytwin_llm::LlmGateway;

use crate::engine::{Engine, EngineConfig, EngineStats, Turn, DAILY_MENU, HOURLY_MENU};
use crate::feeds::{ingest_catalog, FeedSource};
use crate::population::{sample_profile, shard_of};
use crate::recipe::{FollowScope, LoadedRecipe};
use crate::transport::PlatformClient;
use crate::ClientError;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub client_id: String,
    pub role: ClientRole,
    /// Number of client processes sharing the simulation.
    pub clients: u64,
    /// This client's index among them; it owns agents `g` with `g % clients == shard`.
    pub shard: u64,
    pub resume: bool,
    pub poll: Duration,
    pub barrier_timeout: Duration,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            client_id: "client-0".into(),
            role: ClientRole::Orchestrator,
            clients: 1,
            shard: 0,
            resume: false,
            poll: Duration::from_millis(2),
            barrier_timeout: Duration::from_secs(600),
        }
    }
}

/// What one slot looked like from this client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotTrace {
    pub round: u64,
    pub day: u64,
    pub slot: u64,
    /// Agents owned by this client when the slot started.
    pub population: u64,
    pub activity: f64,
    pub activated: u64,
    pub actions: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub simulation: String,
    pub recipe_hash: String,
    pub seed: u64,
    pub client: String,
    pub role: ClientRole,
    pub start_round: u64,
    pub end_round: u64,
    pub agents_owned: u64,
    pub stats: EngineStats,
    pub daily_follow_draws: u64,
    pub feeds_new_articles: u64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub manifest: RunManifest,
    pub trace: Vec<SlotTrace>,
}

struct Clock<'a> {
    api: &'a PlatformClient,
    opts: &'a RunOptions,
    last_seen: Option<u64>,
}

impl Clock<'_> {
    fn observe(&mut self) -> Result<RoundClock, ClientError> {
        let now = self.api.current_slot()?;
        if let Some(prev) = self.last_seen {
            if now.round < prev {
                return Err(ClientError::ClockDesync {
                    observed: now.round,
                    expected: prev,
                });
            }
        }
        self.last_seen = Some(now.round);
        Ok(now)
    }

    /// Blocks until the server clock reaches `round`.
    fn wait_for(&mut self, round: u64) -> Result<RoundClock, ClientError> {
        let start = Instant::now();
        loop {
            let now = self.observe()?;
            if now.round == round {
                return Ok(now);
            }
            if now.round > round {
                return Err(ClientError::ClockDesync {
                    observed: now.round,
                    expected: round,
                });
            }
            self.check_timeout(start, &format!("round {round}"))?;
            thread::sleep(self.opts.poll);
        }
    }

    fn check_timeout(&self, start: Instant, what: &str) -> Result<(), ClientError> {
        if start.elapsed() > self.opts.barrier_timeout {
            return Err(ClientError::Timeout {
                what: what.to_string(),
                secs: self.opts.barrier_timeout.as_secs(),
            });
        }
        Ok(())
    }

    /// Closes `round` for this client and returns once the clock has moved on.
    fn close(&mut self, round: u64) -> Result<(), ClientError> {
        let start = Instant::now();
        match self.opts.role {
            ClientRole::Orchestrator => loop {
                match self.api.advance_slot(&self.opts.client_id) {
                    Ok(next) => {
                        if next.round != round + 1 {
                            return Err(ClientError::ClockDesync {
                                observed: next.round,
                                expected: round + 1,
                            });
                        }
                        self.last_seen = Some(next.round);
                        return Ok(());
                    }
                    Err(ClientError::Platform(PlatformError::BarrierPending(_))) => {
                        self.check_timeout(start, &format!("barrier at round {round}"))?;
                        thread::sleep(self.opts.poll);
                    }
                    Err(e) => return Err(e),
                }
            },
            ClientRole::Worker => {
                self.api.slot_done(&self.opts.client_id, round)?;
                self.wait_for(round + 1).map(|_| ())
            }
        }
    }
}

fn register_client(api: &PlatformClient, loaded: &LoadedRecipe, opts: &RunOptions) -> Result<RoundClock, ClientError> {
    let settings = loaded.recipe.settings();
    let start = Instant::now();
    loop {
        match api.register_client(&opts.client_id, opts.role, Some(settings.clone())) {
            Ok(r) => {
                if opts.role == ClientRole::Orchestrator && r.settings != settings {
                    return Err(ClientError::Config("server kept different simulation settings".into()));
                }
                if opts.role == ClientRole::Orchestrator && (r.clients as u64) < opts.clients {
                    // wait for the workers to join
                } else {
                    return Ok(r.clock);
                }
            }
            // a worker can be up before the orchestrator has configured the server
            Err(ClientError::Platform(PlatformError::ConfigMismatch(m))) if opts.role == ClientRole::Worker => {
                tracing::debug!("waiting for the orchestrator: {m}");
            }
            Err(e) => return Err(e),
        }
        if start.elapsed() > opts.barrier_timeout {
            return Err(ClientError::Timeout {
                what: "client registration".into(),
                secs: opts.barrier_timeout.as_secs(),
            });
        }
        thread::sleep(opts.poll.max(Duration::from_millis(10)));
    }
}

/// Agents are kept in (joined round, name) order on fresh and resumed runs alike.
fn sort_agents(agents: &mut [AgentProfile]) {
    agents.sort_by(|a, b| (a.joined_round, &a.name).cmp(&(b.joined_round, &b.name)));
}

/// Registers this client's share of agents `first .. first + n`, skipping
/// names the server already knows (a resumed run may repeat a growth step).
fn grow(
    api: &PlatformClient,
    loaded: &LoadedRecipe,
    opts: &RunOptions,
    agents: &mut Vec<AgentProfile>,
    first: u64,
    n: u64,
    joined_round: u64,
) -> Result<(), ClientError> {
    let known: BTreeSet<String> = agents.iter().map(|a| a.name.clone()).collect();
    for g in first..first + n {
        if shard_of(g, opts.clients) != opts.shard {
            continue;
        }
        let mut profile = sample_profile(&loaded.recipe, g, &opts.client_id, joined_round)?;
        if known.contains(&profile.name) {
            continue;
        }
        let resp = api.register_agent(&profile)?;
        profile.joined_round = resp.joined_round;
        agents.push(profile);
    }
    Ok(())
}

pub fn run_simulation(
    api: &PlatformClient,
    llm: Arc<dyn LlmGateway>,
    loaded: &LoadedRecipe,
    opts: &RunOptions,
) -> Result<RunReport, ClientError> {
    let recipe = &loaded.recipe;
    recipe.validate()?;
    if opts.clients == 0 || opts.shard >= opts.clients {
        return Err(ClientError::Config(format!(
            "shard {} is not below the client count {}",
            opts.shard, opts.clients
        )));
    }
    let sim = &recipe.simulation;
    let slots = sim.slots;
    let total = recipe.total_rounds();
    let activity = recipe.hourly_activity();

    let mut clock = Clock {
        api,
        opts,
        last_seen: None,
    };
    let start_clock = register_client(api, loaded, opts)?;
    clock.last_seen = Some(start_clock.round);

    let mut agents = api.agents(Some(&opts.client_id))?;
    if !opts.resume && (start_clock.round > 0 || !agents.is_empty()) {
        return Err(ClientError::Config(format!(
            "the server already holds state for {:?} (round {}); pass --resume to continue it",
            opts.client_id, start_clock.round
        )));
    }
    if opts.resume && start_clock.round > total {
        return Err(ClientError::Config(format!(
            "server clock is at round {}, past the recipe's {total} rounds",
            start_clock.round
        )));
    }
    if start_clock.round == 0 {
        grow(api, loaded, opts, &mut agents, 0, sim.starting_agents, 0)?;
    }
    sort_agents(&mut agents);

    let mut engine = Engine::new(
        api.clone(),
        llm,
        EngineConfig {
            labels: recipe.agents.big_five.clone(),
            emotions: recipe.posts.emotions.clone(),
            max_length_thread_reading: recipe.agents.max_length_thread_reading,
            sampling: recipe.servers.llm_options.clone(),
        },
        recipe.seed,
    );
    let feed_source = match &recipe.feeds {
        Some(f) if opts.role == ClientRole::Orchestrator => Some((
            loaded.base_dir.join(&f.catalog),
            match &f.from_dir {
                Some(d) => FeedSource::Directory(loaded.base_dir.join(d)),
                None => FeedSource::http()?,
            },
        )),
        _ => None,
    };

    let mut trace = Vec::new();
    let mut daily_follow_draws = 0;
    let mut feeds_new_articles = 0;
    let mut active_today: BTreeSet<String> = BTreeSet::new();
    let shard = opts.shard.to_string();

    for round in start_clock.round..total {
        let now = clock.wait_for(round)?;
        let (day, slot) = (now.day, now.slot);
        if slot == 0 {
            active_today.clear();
            if let Some((catalog, source)) = &feed_source {
                feeds_new_articles += ingest_catalog(api, catalog, source)?.new_articles as u64;
            }
        }

        let population = agents.len() as u64;
        let fraction = activity[slot as usize];
        let expected = (population as f64 * fraction) as usize;
        let mut rng = seed::stream(recipe.seed, &["activate", &shard, &round.to_string()]);
        let chosen = index::sample(&mut rng, agents.len(), expected.min(agents.len()));
        let mut actions = 0;
        for i in chosen {
            let agent = &agents[i];
            active_today.insert(agent.name.clone());
            let mut turn = Turn::new(recipe.seed, agent, round, "hourly");
            let n = turn.rng.random_range(agent.round_actions.min..=agent.round_actions.max);
            for _ in 0..n {
                engine.act(&mut turn, &HOURLY_MENU)?;
                actions += 1;
            }
        }
        trace.push(SlotTrace {
            round,
            day,
            slot,
            population,
            activity: fraction,
            activated: expected as u64,
            actions,
        });

        if slot + 1 == slots {
            for agent in &agents {
                if sim.daily_follow_scope == FollowScope::Active && !active_today.contains(&agent.name) {
                    continue;
                }
                let mut turn = Turn::new(recipe.seed, agent, round, "daily");
                if turn.rng.random_bool(recipe.agents.probability_of_daily_follow) {
                    daily_follow_draws += 1;
                    engine.act(&mut turn, &DAILY_MENU)?;
                }
            }
            let first = sim.starting_agents + day * sim.new_agents_per_iteration;
            grow(
                api,
                loaded,
                opts,
                &mut agents,
                first,
                sim.new_agents_per_iteration,
                round,
            )?;
        }

        clock.close(round)?;
    }

    let end = clock.observe()?;
    let manifest = RunManifest {
        simulation: sim.name.clone(),
        recipe_hash: loaded.hash.clone(),
        seed: recipe.seed,
        client: opts.client_id.clone(),
        role: opts.role,
        start_round: start_clock.round,
        end_round: end.round,
        agents_owned: agents.len() as u64,
        stats: engine.stats.clone(),
        daily_follow_draws,
        feeds_new_articles,
    };
    let value = serde_json::to_value(&manifest).expect("manifests serialize");
    api.save_manifest(&opts.client_id, &value)?;
    Ok(RunReport { manifest, trace })
}

/// Per-action selection counts keyed by name, for quick reporting.
pub fn selection_counts(stats: &EngineStats) -> BTreeMap<String, u64> {
    stats.selected.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}
