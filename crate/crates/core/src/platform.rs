//! The platform engine: registry, content store, reactions, follow log, news
//! catalog, round clock and client barrier.
//!
//! All state lives in memory and, when a [`Store`] is attached, every
//! mutation is written through to SQLite before it is applied. Reopening the
//! store replays the tables into an identical engine.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotations::extract_annotations;
use crate::domain::{
    AgentProfile, Content, ContentKind, EmotionTaxonomy, FollowAction, FollowEdge, NewsPreference, ProfileRules,
    Reaction, ReactionValue, RoundClock,
};
use crate::news::{Article, CatalogEntry, NewsCatalog, NewsError, Website};
use crate::recommenders::{
    rank_content, shortlist_follow, Candidate, ContentRecommender, Eligible, FollowError, FollowGraph,
    FollowRecommender, Suggestion,
};
use crate::store::{Store, StoreError, StoredState};

/// Per-simulation settings fixed by the orchestrating client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSettings {
    pub name: String,
    pub slots: u64,
    pub visibility_rounds: u64,
    pub emotions: EmotionTaxonomy,
    pub profile_rules: ProfileRules,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        Self {
            name: "default".into(),
            slots: 24,
            visibility_rounds: 36,
            emotions: EmotionTaxonomy::go_emotions(),
            profile_rules: ProfileRules::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TimelineMode {
    Read,
    Comment,
    Reply,
    Search,
}

impl TimelineMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Read => "READ",
            Self::Comment => "COMMENT",
            Self::Reply => "REPLY",
            Self::Search => "SEARCH",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Read, Self::Comment, Self::Reply, Self::Search]
            .into_iter()
            .find(|m| m.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClientRole {
    Orchestrator,
    Worker,
}

impl ClientRole {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Orchestrator => "orchestrator",
            Self::Worker => "worker",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClientInfo {
    pub id: String,
    pub role: ClientRole,
    /// Last round this client reported complete.
    pub done_round: Option<u64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlatformError {
    #[error("agent name {0:?} is already registered")]
    DuplicateName(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("unknown author {0:?}")]
    UnknownAuthor(String),
    #[error("unknown agent {0:?}")]
    UnknownAgent(String),
    #[error("unknown content {0}")]
    UnknownContent(u64),
    #[error("dangling reference: {0}")]
    DanglingReference(String),
    #[error("field mismatch for kind: {0}")]
    KindFieldMismatch(String),
    #[error("emotion {0:?} is not in the taxonomy")]
    InvalidEmotion(String),
    #[error("agent {0:?} cannot follow itself")]
    SelfFollow(String),
    #[error("unknown recommender {0:?}")]
    UnknownRecommender(String),
    #[error("client {0:?} may not advance the clock")]
    UnauthorizedAdvance(String),
    #[error("waiting for clients {0:?} to finish the round")]
    BarrierPending(Vec<String>),
    #[error("clock desync: client reported round {reported}, server is at {current}")]
    ClockDesync { reported: u64, current: u64 },
    #[error("unknown client {0:?}")]
    UnknownClient(String),
    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),
    #[error("unparseable feed: {0}")]
    UnparseableFeed(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("storage: {0}")]
    Storage(String),
}

impl PlatformError {
    /// Stable machine-readable code carried in error responses.
    pub fn code(&self) -> &'static str {
        match self {
            Self::DuplicateName(_) => "DuplicateName",
            Self::InvalidProfile(_) => "InvalidProfile",
            Self::UnknownAuthor(_) => "UnknownAuthor",
            Self::UnknownAgent(_) => "UnknownAgent",
            Self::UnknownContent(_) => "UnknownContent",
            Self::DanglingReference(_) => "DanglingReference",
            Self::KindFieldMismatch(_) => "KindFieldMismatch",
            Self::InvalidEmotion(_) => "InvalidEmotion",
            Self::SelfFollow(_) => "SelfFollow",
            Self::UnknownRecommender(_) => "UnknownRecommender",
            Self::UnauthorizedAdvance(_) => "UnauthorizedAdvance",
            Self::BarrierPending(_) => "BarrierPending",
            Self::ClockDesync { .. } => "ClockDesync",
            Self::UnknownClient(_) => "UnknownClient",
            Self::ConfigMismatch(_) => "ConfigMismatch",
            Self::UnparseableFeed(_) => "UnparseableFeed",
            Self::InvalidRequest(_) => "InvalidRequest",
            Self::Storage(_) => "Storage",
        }
    }
}

impl From<StoreError> for PlatformError {
    fn from(e: StoreError) -> Self {
        Self::Storage(e.to_string())
    }
}

/// A content to publish; the kind decides which links must be present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewContent {
    pub author: String,
    pub kind: ContentKind,
    pub text: String,
    #[serde(default)]
    pub parent: Option<u64>,
    #[serde(default)]
    pub article: Option<u64>,
    #[serde(default)]
    pub shared_from: Option<u64>,
    #[serde(default)]
    pub emotions: Vec<String>,
}

/// One timeline entry as returned to the client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineItem {
    pub content: Content,
    pub likes: u64,
    pub dislikes: u64,
    /// The requesting agent currently follows the author.
    pub followee_authored: bool,
}

/// A `/read`-family call, as logged for impression accounting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineCall {
    pub call_id: u64,
    pub round: u64,
    pub agent: String,
    pub mode: TimelineMode,
    pub recommender: String,
    pub k: u64,
    pub candidates: u64,
    pub followee_candidates: u64,
    pub returned: Vec<u64>,
    pub followee_returned: u64,
}

/// Results of a full-store consistency scan.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub agents: usize,
    pub contents: usize,
    pub reactions: usize,
    pub follow_events: usize,
    pub dangling_references: Vec<String>,
    pub kind_violations: Vec<String>,
    pub visibility_violations: Vec<String>,
    pub graph_replay_matches: bool,
}

impl AuditReport {
    pub fn referential_violations(&self) -> usize {
        self.dangling_references.len() + self.kind_violations.len()
    }
}

#[derive(Debug, Default)]
pub struct Platform {
    settings: SimulationSettings,
    agents: BTreeMap<String, AgentProfile>,
    agent_names: HashSet<String>,
    contents: Vec<Content>,
    reactions: HashMap<(String, u64), Reaction>,
    // (likes, dislikes), indexed like `contents`
    tallies: Vec<(u64, u64)>,
    follow_log: Vec<FollowEdge>,
    graph: FollowGraph,
    news: NewsCatalog,
    clock: RoundClock,
    clients: BTreeMap<String, ClientInfo>,
    timeline_log: Vec<TimelineCall>,
    impressions: BTreeMap<u64, u64>,
    manifests: BTreeMap<String, String>,
    store: Option<Store>,
}

fn news_err(e: NewsError) -> PlatformError {
    match e {
        NewsError::UnparseableFeed(d) => PlatformError::UnparseableFeed(d),
        NewsError::UnknownWebsite(id) => PlatformError::DanglingReference(format!("website {id}")),
        other => PlatformError::InvalidRequest(other.to_string()),
    }
}

impl Platform {
    /// A purely in-memory platform.
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (or creates) a store file and replays it.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, PlatformError> {
        let store = Store::open(path.as_ref())?;
        let state = store.load()?;
        let mut platform = Self::from_state(state)?;
        platform.store = Some(store);
        Ok(platform)
    }

    /// Replays a store file without attaching it for writes.
    pub fn load_snapshot(path: impl AsRef<Path>) -> Result<Self, PlatformError> {
        let store = Store::open_readonly(path.as_ref())?;
        Self::from_state(store.load()?)
    }

    fn from_state(state: StoredState) -> Result<Self, PlatformError> {
        let mut p = Self::default();
        if let Some(settings) = state.settings {
            p.settings = settings;
        }
        for agent in state.agents {
            p.agent_names.insert(agent.name.clone());
            p.agents.insert(agent.name.clone(), agent);
        }
        p.tallies = vec![(0, 0); state.contents.len()];
        for (i, c) in state.contents.iter().enumerate() {
            if c.id != i as u64 + 1 {
                return Err(PlatformError::Storage(format!(
                    "content ids not contiguous at {}",
                    c.id
                )));
            }
        }
        p.contents = state.contents;
        for r in state.reactions {
            p.tally(r.content, r.value, 1);
            p.reactions.insert((r.agent.clone(), r.content), r);
        }
        for e in state.follows {
            p.graph.apply(&e);
            p.follow_log.push(e);
        }
        for w in state.websites {
            p.news.insert_website(w);
        }
        for a in state.articles {
            p.news.insert_article(a);
        }
        if let Some(round) = state.last_round {
            p.clock = RoundClock::from_round(round, p.settings.slots);
        }
        for c in state.clients {
            p.clients.insert(c.id.clone(), c);
        }
        for call in state.timeline_calls {
            for id in &call.returned {
                *p.impressions.entry(*id).or_default() += 1;
            }
            p.timeline_log.push(call);
        }
        p.manifests = state.manifests;
        Ok(p)
    }

    fn tally(&mut self, content: u64, value: ReactionValue, delta: i64) {
        let t = &mut self.tallies[content as usize - 1];
        let slot = match value {
            ReactionValue::Like => &mut t.0,
            ReactionValue::Dislike => &mut t.1,
        };
        *slot = (*slot as i64 + delta) as u64;
    }

    pub fn settings(&self) -> &SimulationSettings {
        &self.settings
    }

    /// Replaces the simulation settings. Rejected once the simulation has started.
    pub fn configure(&mut self, settings: SimulationSettings) -> Result<(), PlatformError> {
        if settings == self.settings {
            return Ok(());
        }
        if settings.slots == 0 {
            return Err(PlatformError::InvalidRequest("slots must be positive".into()));
        }
        if self.clock.round > 0 || !self.contents.is_empty() || !self.agents.is_empty() {
            return Err(PlatformError::ConfigMismatch(
                "simulation already started with different settings".into(),
            ));
        }
        if let Some(store) = &self.store {
            store.save_settings(&settings)?;
        }
        self.clock = RoundClock::from_round(self.clock.round, settings.slots);
        self.settings = settings;
        Ok(())
    }

    // ---- agents -------------------------------------------------------

    pub fn register_agent(&mut self, mut profile: AgentProfile) -> Result<String, PlatformError> {
        if self.agents.contains_key(&profile.name) {
            return Err(PlatformError::DuplicateName(profile.name));
        }
        self.settings
            .profile_rules
            .validate(&profile)
            .map_err(PlatformError::InvalidProfile)?;
        profile.joined_round = self.clock.round;
        if let Some(store) = &self.store {
            store.insert_agent(&profile)?;
        }
        let name = profile.name.clone();
        self.agent_names.insert(name.clone());
        self.agents.insert(name.clone(), profile);
        Ok(name)
    }

    pub fn agent(&self, name: &str) -> Option<&AgentProfile> {
        self.agents.get(name)
    }

    pub fn agents(&self) -> impl Iterator<Item = &AgentProfile> {
        self.agents.values()
    }

    pub fn agents_owned_by<'a>(&'a self, owner: &'a str) -> impl Iterator<Item = &'a AgentProfile> {
        self.agents.values().filter(move |a| a.owner == owner)
    }

    fn require_agent(&self, name: &str) -> Result<&AgentProfile, PlatformError> {
        self.agents
            .get(name)
            .ok_or_else(|| PlatformError::UnknownAgent(name.to_string()))
    }

    // ---- contents -----------------------------------------------------

    pub fn content(&self, id: u64) -> Option<&Content> {
        self.contents.get((id as usize).checked_sub(1)?)
    }

    pub fn contents(&self) -> &[Content] {
        &self.contents
    }

    fn require_content(&self, id: u64, what: &str) -> Result<&Content, PlatformError> {
        self.content(id)
            .ok_or_else(|| PlatformError::DanglingReference(format!("{what} {id}")))
    }

    pub fn publish(&mut self, new: NewContent) -> Result<u64, PlatformError> {
        if !self.agents.contains_key(&new.author) {
            return Err(PlatformError::UnknownAuthor(new.author));
        }
        let id = self.contents.len() as u64 + 1;
        let mismatch = |msg: &str| Err(PlatformError::KindFieldMismatch(format!("{}: {msg}", new.kind)));
        let (thread_root, article) = match new.kind {
            ContentKind::Post => {
                if new.parent.is_some() || new.article.is_some() || new.shared_from.is_some() {
                    return mismatch("a post carries no parent, article or shared_from");
                }
                (id, None)
            }
            ContentKind::Comment => {
                if new.article.is_some() || new.shared_from.is_some() {
                    return mismatch("a comment carries no article or shared_from");
                }
                let Some(parent) = new.parent else {
                    return mismatch("a comment needs a parent");
                };
                (self.require_content(parent, "parent")?.thread_root, None)
            }
            ContentKind::News => {
                if new.parent.is_some() || new.shared_from.is_some() {
                    return mismatch("news carries no parent or shared_from");
                }
                let Some(article) = new.article else {
                    return mismatch("news needs an article");
                };
                if self.news.article(article).is_none() {
                    return Err(PlatformError::DanglingReference(format!("article {article}")));
                }
                (id, Some(article))
            }
            ContentKind::Share => {
                if new.parent.is_some() {
                    return mismatch("a share starts a new thread");
                }
                let Some(source) = new.shared_from else {
                    return mismatch("a share needs shared_from");
                };
                let original = self.require_content(source, "shared_from")?;
                if !matches!(original.kind, ContentKind::News | ContentKind::Share) {
                    return mismatch("only news or shares can be shared");
                }
                let article = original.article;
                if new.article.is_some() && new.article != article {
                    return mismatch("article differs from the shared content's article");
                }
                (id, article)
            }
        };

        let mut emotions: Vec<String> = Vec::new();
        for e in &new.emotions {
            let e = e.trim().to_lowercase();
            if !self.settings.emotions.contains(&e) {
                return Err(PlatformError::InvalidEmotion(e));
            }
            if !emotions.contains(&e) {
                emotions.push(e);
            }
        }

        let ann = extract_annotations(&new.text, &self.agent_names);
        let content = Content {
            id,
            author: new.author,
            kind: new.kind,
            text: new.text,
            thread_root,
            parent: new.parent,
            article,
            shared_from: new.shared_from,
            round: self.clock.round,
            mentions: ann.mentions,
            hashtags: ann.hashtags,
            emotions,
        };
        if let Some(store) = &self.store {
            store.insert_content(&content)?;
        }
        self.contents.push(content);
        self.tallies.push((0, 0));
        Ok(id)
    }

    /// Ancestors of `id` from the thread root down to `id` itself.
    pub fn thread_path(&self, id: u64) -> Result<Vec<&Content>, PlatformError> {
        let mut path = Vec::new();
        let mut cursor = Some(id);
        while let Some(cid) = cursor {
            let c = self.content(cid).ok_or(PlatformError::UnknownContent(cid))?;
            path.push(c);
            cursor = c.parent;
        }
        path.reverse();
        Ok(path)
    }

    // ---- reactions ----------------------------------------------------

    pub fn react(&mut self, agent: &str, content: u64, value: ReactionValue) -> Result<(), PlatformError> {
        self.require_agent(agent)?;
        if self.content(content).is_none() {
            return Err(PlatformError::UnknownContent(content));
        }
        let reaction = Reaction {
            agent: agent.to_string(),
            content,
            value,
            round: self.clock.round,
        };
        if let Some(store) = &self.store {
            store.upsert_reaction(&reaction)?;
        }
        if let Some(old) = self.reactions.insert((agent.to_string(), content), reaction) {
            self.tally(content, old.value, -1);
        }
        self.tally(content, value, 1);
        Ok(())
    }

    pub fn reactions(&self) -> impl Iterator<Item = &Reaction> {
        self.reactions.values()
    }

    pub fn reaction(&self, agent: &str, content: u64) -> Option<&Reaction> {
        self.reactions.get(&(agent.to_string(), content))
    }

    /// (likes, dislikes) currently held by a content.
    pub fn tallies(&self, content: u64) -> Option<(u64, u64)> {
        self.tallies.get((content as usize).checked_sub(1)?).copied()
    }

    /// Net popularity: likes minus dislikes.
    pub fn popularity(&self, content: u64) -> Option<i64> {
        self.tallies(content).map(|(l, d)| l as i64 - d as i64)
    }

    // ---- follows ------------------------------------------------------

    pub fn set_follow(&mut self, follower: &str, followee: &str, action: FollowAction) -> Result<(), PlatformError> {
        if follower == followee {
            return Err(PlatformError::SelfFollow(follower.to_string()));
        }
        self.require_agent(follower)?;
        self.require_agent(followee)?;
        let edge = FollowEdge {
            follower: follower.to_string(),
            followee: followee.to_string(),
            action,
            round: self.clock.round,
        };
        if let Some(store) = &self.store {
            store.insert_follow(&edge)?;
        }
        self.graph.apply(&edge);
        self.follow_log.push(edge);
        Ok(())
    }

    pub fn graph(&self) -> &FollowGraph {
        &self.graph
    }

    pub fn follow_log(&self) -> &[FollowEdge] {
        &self.follow_log
    }

    pub fn follow_candidates(
        &self,
        agent: &str,
        recommender: &FollowRecommender,
    ) -> Result<Vec<Suggestion>, PlatformError> {
        let profile = self.require_agent(agent)?;
        recommender.validate().map_err(PlatformError::InvalidRequest)?;
        let population: Vec<Eligible<'_>> = self
            .agents
            .values()
            .map(|a| Eligible {
                name: &a.name,
                leaning: &a.political_leaning,
            })
            .collect();
        match shortlist_follow(&self.graph, agent, &profile.political_leaning, &population, recommender) {
            Ok(list) => Ok(list),
            Err(FollowError::EmptyPool(_)) => Ok(Vec::new()),
        }
    }

    // ---- timelines ----------------------------------------------------

    fn visible_from(&self) -> u64 {
        self.clock.round.saturating_sub(self.settings.visibility_rounds)
    }

    fn visible(&self) -> impl Iterator<Item = &Content> {
        let from = self.visible_from();
        // contents are stored in round order, so scan back from the newest
        let start = self.contents.partition_point(|c| c.round < from);
        self.contents[start..].iter()
    }

    /// Candidate set of a timeline call, before ranking.
    fn timeline_candidates(&self, agent: &str, mode: TimelineMode, kinds: Option<&[ContentKind]>) -> Vec<&Content> {
        let others = self.visible().filter(|c| c.author != agent);
        let mut out: Vec<&Content> = match mode {
            TimelineMode::Read | TimelineMode::Comment => others.collect(),
            TimelineMode::Reply => {
                let threads: BTreeSet<u64> = self
                    .visible()
                    .filter(|c| c.mentions.iter().any(|m| m == agent))
                    .map(|c| c.thread_root)
                    .collect();
                others.filter(|c| threads.contains(&c.thread_root)).collect()
            }
            TimelineMode::Search => {
                let tags: HashSet<&str> = self
                    .visible()
                    .filter(|c| c.author == agent)
                    .flat_map(|c| c.hashtags.iter().map(String::as_str))
                    .collect();
                others
                    .filter(|c| c.hashtags.iter().any(|t| tags.contains(t.as_str())))
                    .collect()
            }
        };
        if let Some(kinds) = kinds {
            out.retain(|c| kinds.contains(&c.kind));
        }
        out
    }

    /// Recommends up to `k` visible contents for `agent` and logs the impressions.
    pub fn timeline(
        &mut self,
        agent: &str,
        recommender: &ContentRecommender,
        mode: TimelineMode,
        kinds: Option<&[ContentKind]>,
    ) -> Result<Vec<TimelineItem>, PlatformError> {
        self.require_agent(agent)?;
        recommender.validate().map_err(PlatformError::InvalidRequest)?;
        let followees = self.graph.followees(agent);
        let pool = self.timeline_candidates(agent, mode, kinds);
        let candidates: Vec<Candidate<'_>> = pool
            .iter()
            .map(|c| {
                let (likes, dislikes) = self.tallies[c.id as usize - 1];
                Candidate {
                    id: c.id,
                    round: c.round,
                    author: &c.author,
                    likes,
                    dislikes,
                }
            })
            .collect();
        let followee_candidates = candidates.iter().filter(|c| followees.contains(c.author)).count() as u64;
        let ids = rank_content(&candidates, followees, recommender);
        let items: Vec<TimelineItem> = ids
            .iter()
            .map(|&id| {
                let content = self.contents[id as usize - 1].clone();
                let (likes, dislikes) = self.tallies[id as usize - 1];
                let followee_authored = followees.contains(&content.author);
                TimelineItem {
                    content,
                    likes,
                    dislikes,
                    followee_authored,
                }
            })
            .collect();
        let call = TimelineCall {
            call_id: self.timeline_log.len() as u64 + 1,
            round: self.clock.round,
            agent: agent.to_string(),
            mode,
            recommender: recommender.id.name().to_string(),
            k: recommender.k as u64,
            candidates: candidates.len() as u64,
            followee_candidates,
            returned: ids.clone(),
            followee_returned: items.iter().filter(|i| i.followee_authored).count() as u64,
        };
        if let Some(store) = &self.store {
            store.insert_timeline_call(&call)?;
        }
        for id in &ids {
            *self.impressions.entry(*id).or_default() += 1;
        }
        self.timeline_log.push(call);
        Ok(items)
    }

    pub fn timeline_log(&self) -> &[TimelineCall] {
        &self.timeline_log
    }

    /// Number of times each content was returned by a timeline call.
    pub fn impressions(&self) -> &BTreeMap<u64, u64> {
        &self.impressions
    }

    // ---- news ---------------------------------------------------------

    pub fn register_website(&mut self, entry: &CatalogEntry) -> Result<Website, PlatformError> {
        let (site, fresh) = self.news.upsert_website(entry);
        if fresh {
            if let Some(store) = &self.store {
                if let Err(e) = store.insert_website(&site) {
                    // roll the in-memory insert back by rebuilding from the store on next open
                    return Err(e.into());
                }
            }
        }
        Ok(site)
    }

    /// Parses `document` and stores its new articles under `website`.
    pub fn ingest_feed(&mut self, website: &CatalogEntry, document: &[u8]) -> Result<IngestReport, PlatformError> {
        let parsed = crate::news::parse_feed(document).map_err(news_err)?;
        let site = self.register_website(website)?;
        let fresh = self
            .news
            .ingest(site.id, &parsed.items, self.clock.round)
            .map_err(news_err)?;
        if let Some(store) = &self.store {
            for a in &fresh {
                store.insert_article(a)?;
            }
        }
        Ok(IngestReport {
            website_id: site.id,
            new_articles: fresh.iter().map(|a| a.id).collect(),
            malformed: parsed.malformed as u64,
        })
    }

    pub fn news(&self) -> &NewsCatalog {
        &self.news
    }

    /// Picks an article for a NEWS action, preferring today's articles.
    pub fn pick_article(&self, preference: &NewsPreference, seed: u64) -> Option<(Article, Website)> {
        let slots = self.settings.slots;
        let day_start = self.clock.day * slots;
        let article = self.news.pick_article(preference, day_start..day_start + slots, seed)?;
        let site = self.news.website(article.website_id)?;
        Some((article.clone(), site.clone()))
    }

    // ---- clock and clients -------------------------------------------

    pub fn clock(&self) -> RoundClock {
        self.clock
    }

    pub fn clients(&self) -> impl Iterator<Item = &ClientInfo> {
        self.clients.values()
    }

    pub fn register_client(
        &mut self,
        id: &str,
        role: ClientRole,
        settings: Option<SimulationSettings>,
    ) -> Result<ClientInfo, PlatformError> {
        if id.trim().is_empty() {
            return Err(PlatformError::InvalidRequest("empty client id".into()));
        }
        if role == ClientRole::Orchestrator {
            if let Some(other) = self
                .clients
                .values()
                .find(|c| c.role == ClientRole::Orchestrator && c.id != id)
            {
                return Err(PlatformError::ConfigMismatch(format!(
                    "client {:?} already orchestrates this simulation",
                    other.id
                )));
            }
            if let Some(settings) = settings {
                self.configure(settings)?;
            }
        } else if let Some(settings) = settings {
            if settings.name != self.settings.name {
                return Err(PlatformError::ConfigMismatch(format!(
                    "worker joined simulation {:?}, server runs {:?}",
                    settings.name, self.settings.name
                )));
            }
        }
        if let Some(existing) = self.clients.get(id) {
            if existing.role != role {
                return Err(PlatformError::ConfigMismatch(format!(
                    "client {id:?} registered as {}",
                    existing.role.as_str()
                )));
            }
            return Ok(existing.clone());
        }
        let info = ClientInfo {
            id: id.to_string(),
            role,
            done_round: None,
        };
        if let Some(store) = &self.store {
            store.insert_client(&info)?;
        }
        self.clients.insert(id.to_string(), info.clone());
        Ok(info)
    }

    /// A worker reports that all its actions for `round` are done.
    pub fn slot_done(&mut self, client: &str, round: u64) -> Result<RoundClock, PlatformError> {
        let current = self.clock.round;
        let info = self
            .clients
            .get_mut(client)
            .ok_or_else(|| PlatformError::UnknownClient(client.to_string()))?;
        if round != current {
            return Err(PlatformError::ClockDesync {
                reported: round,
                current,
            });
        }
        info.done_round = Some(round);
        Ok(self.clock)
    }

    /// Advances the clock by one slot once every registered client is done.
    ///
    /// Only the orchestrator may call this; the call itself marks the
    /// orchestrator done for the current round.
    pub fn advance_slot(&mut self, client: &str) -> Result<RoundClock, PlatformError> {
        let current = self.clock.round;
        match self.clients.get_mut(client) {
            Some(info) if info.role == ClientRole::Orchestrator => info.done_round = Some(current),
            _ => return Err(PlatformError::UnauthorizedAdvance(client.to_string())),
        }
        let pending: Vec<String> = self
            .clients
            .values()
            .filter(|c| c.done_round != Some(current))
            .map(|c| c.id.clone())
            .collect();
        if !pending.is_empty() {
            return Err(PlatformError::BarrierPending(pending));
        }
        let next = self.clock.next(self.settings.slots);
        if let Some(store) = &self.store {
            store.insert_round(&next)?;
        }
        self.clock = next;
        Ok(next)
    }

    // ---- run manifests -----------------------------------------------

    pub fn save_manifest(&mut self, client: &str, manifest_json: &str) -> Result<(), PlatformError> {
        serde_json::from_str::<serde_json::Value>(manifest_json)
            .map_err(|e| PlatformError::InvalidRequest(format!("manifest is not JSON: {e}")))?;
        if let Some(store) = &self.store {
            store.save_manifest(client, manifest_json)?;
        }
        self.manifests.insert(client.to_string(), manifest_json.to_string());
        Ok(())
    }

    pub fn manifests(&self) -> &BTreeMap<String, String> {
        &self.manifests
    }

    // ---- audit --------------------------------------------------------

    /// Scans every table for broken references and invariant violations.
    pub fn audit(&self) -> AuditReport {
        let mut r = AuditReport {
            agents: self.agents.len(),
            contents: self.contents.len(),
            reactions: self.reactions.len(),
            follow_events: self.follow_log.len(),
            ..AuditReport::default()
        };
        for c in &self.contents {
            if !self.agents.contains_key(&c.author) {
                r.dangling_references
                    .push(format!("content {} author {}", c.id, c.author));
            }
            if let Some(p) = c.parent {
                if p >= c.id || self.content(p).is_none() {
                    r.dangling_references.push(format!("content {} parent {p}", c.id));
                }
            }
            if let Some(a) = c.article {
                match self.news.article(a) {
                    Some(article) if self.news.website(article.website_id).is_some() => {}
                    _ => r.dangling_references.push(format!("content {} article {a}", c.id)),
                }
            }
            if let Some(s) = c.shared_from {
                match self.content(s) {
                    Some(orig) if matches!(orig.kind, ContentKind::News | ContentKind::Share) => {}
                    Some(_) => r
                        .kind_violations
                        .push(format!("content {} shares a non-news {s}", c.id)),
                    None => r.dangling_references.push(format!("content {} shared_from {s}", c.id)),
                }
            }
            for m in &c.mentions {
                if !self.agents.contains_key(m) {
                    r.dangling_references.push(format!("content {} mention {m}", c.id));
                }
            }
            let kind_ok = match c.kind {
                ContentKind::Comment => c.parent.is_some() && c.article.is_none() && c.shared_from.is_none(),
                ContentKind::Post => c.parent.is_none() && c.thread_root == c.id && c.article.is_none(),
                ContentKind::News => c.parent.is_none() && c.thread_root == c.id && c.article.is_some(),
                ContentKind::Share => {
                    c.parent.is_none() && c.thread_root == c.id && c.shared_from.is_some() && c.article.is_some()
                }
            };
            if !kind_ok {
                r.kind_violations
                    .push(format!("content {} violates {} field rules", c.id, c.kind));
            }
            // walking parents ends at the thread root
            if let Ok(path) = self.thread_path(c.id) {
                let root = path[0];
                if root.parent.is_some() || root.id != c.thread_root {
                    r.kind_violations.push(format!("content {} thread root mismatch", c.id));
                }
            }
            if !self.settings.emotions.labels.is_empty() {
                if let Some(e) = self.settings.emotions.first_foreign(&c.emotions) {
                    r.kind_violations.push(format!("content {} emotion {e}", c.id));
                }
            }
        }
        for reaction in self.reactions.values() {
            if !self.agents.contains_key(&reaction.agent) || self.content(reaction.content).is_none() {
                r.dangling_references
                    .push(format!("reaction {} -> {}", reaction.agent, reaction.content));
            }
        }
        for e in &self.follow_log {
            if !self.agents.contains_key(&e.follower) || !self.agents.contains_key(&e.followee) {
                r.dangling_references
                    .push(format!("follow {} -> {}", e.follower, e.followee));
            }
            if e.follower == e.followee {
                r.kind_violations.push(format!("self follow {}", e.follower));
            }
        }
        for a in self.news.articles() {
            if self.news.website(a.website_id).is_none() {
                r.dangling_references
                    .push(format!("article {} website {}", a.id, a.website_id));
            }
        }
        for call in &self.timeline_log {
            for id in &call.returned {
                match self.content(*id) {
                    Some(c) if call.round.saturating_sub(c.round) <= self.settings.visibility_rounds => {}
                    Some(c) => r.visibility_violations.push(format!(
                        "call {} at round {} returned content {} from round {}",
                        call.call_id, call.round, c.id, c.round
                    )),
                    None => r
                        .dangling_references
                        .push(format!("call {} returned {id}", call.call_id)),
                }
            }
        }
        r.graph_replay_matches = FollowGraph::replay(&self.follow_log) == self.graph;
        r
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub website_id: u64,
    pub new_articles: Vec<u64>,
    pub malformed: u64,
}
