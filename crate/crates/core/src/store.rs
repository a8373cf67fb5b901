//! SQLite persistence for the platform engine.
//!
//! The engine writes through on every mutation; [`Store::load`] reads every
//! table back in insertion order so the engine can be replayed after a
//! restart.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rusqlite::{params, Connection, OpenFlags, OptionalExtension};
use thiserror::Error;

use crate::domain::{
    AgentProfile, Content, ContentKind, FollowAction, FollowEdge, Reaction, ReactionValue, RoundClock,
};
use crate::news::{Article, Website};
use crate::platform::{ClientInfo, ClientRole, SimulationSettings, TimelineCall, TimelineMode};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("sqlite: {0}")]
    Sqlite(#[from] rusqlite::Error),
    #[error("corrupt row: {0}")]
    Corrupt(String),
    #[error("json column: {0}")]
    Json(#[from] serde_json::Error),
}

const SCHEMA: &str = r#"
CREATE TABLE IF NOT EXISTS simulation_settings (
    key TEXT PRIMARY KEY,
    value TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS user_mgmt (
    name TEXT PRIMARY KEY,
    owner TEXT NOT NULL,
    joined_round INTEGER NOT NULL,
    leaning TEXT NOT NULL,
    profile TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS post (
    id INTEGER PRIMARY KEY,
    author TEXT NOT NULL REFERENCES user_mgmt(name),
    kind TEXT NOT NULL,
    text TEXT NOT NULL,
    thread_root INTEGER NOT NULL,
    parent INTEGER REFERENCES post(id),
    article INTEGER REFERENCES articles(id),
    shared_from INTEGER REFERENCES post(id),
    round INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS mentions (
    content_id INTEGER NOT NULL REFERENCES post(id),
    position INTEGER NOT NULL,
    agent TEXT NOT NULL REFERENCES user_mgmt(name),
    PRIMARY KEY (content_id, position)
);
CREATE TABLE IF NOT EXISTS hashtags (
    content_id INTEGER NOT NULL REFERENCES post(id),
    position INTEGER NOT NULL,
    tag TEXT NOT NULL,
    PRIMARY KEY (content_id, position)
);
CREATE TABLE IF NOT EXISTS emotions (
    content_id INTEGER NOT NULL REFERENCES post(id),
    position INTEGER NOT NULL,
    label TEXT NOT NULL,
    PRIMARY KEY (content_id, position)
);
CREATE TABLE IF NOT EXISTS reactions (
    agent TEXT NOT NULL REFERENCES user_mgmt(name),
    content_id INTEGER NOT NULL REFERENCES post(id),
    value TEXT NOT NULL,
    round INTEGER NOT NULL,
    seq INTEGER NOT NULL,
    PRIMARY KEY (agent, content_id)
);
CREATE TABLE IF NOT EXISTS follow (
    seq INTEGER PRIMARY KEY AUTOINCREMENT,
    follower TEXT NOT NULL REFERENCES user_mgmt(name),
    followee TEXT NOT NULL REFERENCES user_mgmt(name),
    action TEXT NOT NULL,
    round INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS websites (
    id INTEGER PRIMARY KEY,
    name TEXT NOT NULL,
    rss_url TEXT NOT NULL UNIQUE,
    leaning TEXT NOT NULL,
    category TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS articles (
    id INTEGER PRIMARY KEY,
    website_id INTEGER NOT NULL REFERENCES websites(id),
    title TEXT NOT NULL,
    summary TEXT NOT NULL,
    link TEXT NOT NULL,
    fetched_round INTEGER NOT NULL,
    UNIQUE (website_id, link)
);
CREATE TABLE IF NOT EXISTS rounds (
    round INTEGER PRIMARY KEY,
    day INTEGER NOT NULL,
    slot INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS clients (
    id TEXT PRIMARY KEY,
    role TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS timeline_calls (
    call_id INTEGER PRIMARY KEY,
    round INTEGER NOT NULL,
    agent TEXT NOT NULL,
    mode TEXT NOT NULL,
    recommender TEXT NOT NULL,
    k INTEGER NOT NULL,
    candidates INTEGER NOT NULL,
    followee_candidates INTEGER NOT NULL,
    followee_returned INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS impressions (
    call_id INTEGER NOT NULL REFERENCES timeline_calls(call_id),
    position INTEGER NOT NULL,
    content_id INTEGER NOT NULL REFERENCES post(id),
    PRIMARY KEY (call_id, position)
);
CREATE TABLE IF NOT EXISTS run_manifest (
    client_id TEXT PRIMARY KEY,
    manifest TEXT NOT NULL
);
"#;

/// Everything read back from a store file.
#[derive(Debug, Default)]
pub struct StoredState {
    pub settings: Option<SimulationSettings>,
    pub agents: Vec<AgentProfile>,
    pub contents: Vec<Content>,
    pub reactions: Vec<Reaction>,
    pub follows: Vec<FollowEdge>,
    pub websites: Vec<Website>,
    pub articles: Vec<Article>,
    pub last_round: Option<u64>,
    pub clients: Vec<ClientInfo>,
    pub timeline_calls: Vec<TimelineCall>,
    pub manifests: BTreeMap<String, String>,
}

pub struct Store {
    conn: Connection,
    reaction_seq: std::cell::Cell<u64>,
}

impl fmt::Debug for Store {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Store").field("path", &self.conn.path()).finish()
    }
}

fn corrupt(what: impl Into<String>) -> StoreError {
    StoreError::Corrupt(what.into())
}

impl Store {
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        let conn = Connection::open(path)?;
        conn.pragma_update(None, "journal_mode", "WAL")?;
        conn.pragma_update(None, "synchronous", "NORMAL")?;
        conn.pragma_update(None, "foreign_keys", "ON")?;
        conn.execute_batch(SCHEMA)?;
        let seq: u64 = conn.query_row("SELECT COALESCE(MAX(seq), 0) FROM reactions", [], |r| r.get(0))?;
        Ok(Self {
            conn,
            reaction_seq: std::cell::Cell::new(seq),
        })
    }

    pub fn open_readonly(path: &Path) -> Result<Self, StoreError> {
        let conn = Connection::open_with_flags(path, OpenFlags::SQLITE_OPEN_READ_ONLY)?;
        Ok(Self {
            conn,
            reaction_seq: std::cell::Cell::new(0),
        })
    }

    pub fn save_settings(&self, settings: &SimulationSettings) -> Result<(), StoreError> {
        self.conn.execute(
            "INSERT INTO simulation_settings (key, value) VALUES ('settings', ?1)
             ON CONFLICT(key) DO UPDATE SET value = excluded.value",
            params![serde_json::to_string(settings)?],
        )?;
        Ok(())
    }

    pub fn insert_agent(&self, p: &AgentProfile) -> Result<(), StoreError> {
        self.conn
            .prepare_cached(
                "INSERT INTO user_mgmt (name, owner, joined_round, leaning, profile) VALUES (?1, ?2, ?3, ?4, ?5)",
            )?
            .execute(params![
                p.name,
                p.owner,
                p.joined_round as i64,
                p.political_leaning,
                serde_json::to_string(p)?
            ])?;
        Ok(())
    }

    pub fn insert_content(&self, c: &Content) -> Result<(), StoreError> {
        let tx = self.conn.unchecked_transaction()?;
        tx.prepare_cached(
            "INSERT INTO post (id, author, kind, text, thread_root, parent, article, shared_from, round)
             VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9)",
        )?
        .execute(params![
            c.id as i64,
            c.author,
            c.kind.as_str(),
            c.text,
            c.thread_root as i64,
            c.parent.map(|v| v as i64),
            c.article.map(|v| v as i64),
            c.shared_from.map(|v| v as i64),
            c.round as i64,
        ])?;
        for (table, column, values) in [
            ("mentions", "agent", &c.mentions),
            ("hashtags", "tag", &c.hashtags),
            ("emotions", "label", &c.emotions),
        ] {
            let sql = format!("INSERT INTO {table} (content_id, position, {column}) VALUES (?1, ?2, ?3)");
            let mut stmt = tx.prepare_cached(&sql)?;
            for (i, v) in values.iter().enumerate() {
                stmt.execute(params![c.id as i64, i as i64, v])?;
            }
        }
        tx.commit()?;
        Ok(())
    }

    pub fn upsert_reaction(&self, r: &Reaction) -> Result<(), StoreError> {
        let seq = self.reaction_seq.get() + 1;
        self.conn
            .prepare_cached(
                "INSERT INTO reactions (agent, content_id, value, round, seq) VALUES (?1, ?2, ?3, ?4, ?5)
                 ON CONFLICT(agent, content_id) DO UPDATE SET value = excluded.value, round = excluded.round",
            )?
            .execute(params![
                r.agent,
                r.content as i64,
                r.value.as_str(),
                r.round as i64,
                seq as i64
            ])?;
        self.reaction_seq.set(seq);
        Ok(())
    }

    pub fn insert_follow(&self, e: &FollowEdge) -> Result<(), StoreError> {
        self.conn
            .prepare_cached("INSERT INTO follow (follower, followee, action, round) VALUES (?1, ?2, ?3, ?4)")?
            .execute(params![e.follower, e.followee, e.action.as_str(), e.round as i64])?;
        Ok(())
    }

    pub fn insert_website(&self, w: &Website) -> Result<(), StoreError> {
        self.conn
            .prepare_cached("INSERT INTO websites (id, name, rss_url, leaning, category) VALUES (?1, ?2, ?3, ?4, ?5)")?
            .execute(params![w.id as i64, w.name, w.rss_url, w.leaning, w.category])?;
        Ok(())
    }

    pub fn insert_article(&self, a: &Article) -> Result<(), StoreError> {
        self.conn
            .prepare_cached(
                "INSERT INTO articles (id, website_id, title, summary, link, fetched_round) VALUES (?1, ?2, ?3, ?4, ?5, ?6)",
            )?
            .execute(params![a.id as i64, a.website_id as i64, a.title, a.summary, a.link, a.fetched_round as i64])?;
        Ok(())
    }

    pub fn insert_round(&self, c: &RoundClock) -> Result<(), StoreError> {
        self.conn
            .prepare_cached("INSERT OR REPLACE INTO rounds (round, day, slot) VALUES (?1, ?2, ?3)")?
            .execute(params![c.round as i64, c.day as i64, c.slot as i64])?;
        Ok(())
    }

    pub fn insert_client(&self, c: &ClientInfo) -> Result<(), StoreError> {
        self.conn
            .prepare_cached("INSERT OR IGNORE INTO clients (id, role) VALUES (?1, ?2)")?
            .execute(params![c.id, c.role.as_str()])?;
        Ok(())
    }

    pub fn insert_timeline_call(&self, call: &TimelineCall) -> Result<(), StoreError> {
        let tx = self.conn.unchecked_transaction()?;
        tx.prepare_cached(
            "INSERT INTO timeline_calls (call_id, round, agent, mode, recommender, k, candidates, followee_candidates, followee_returned)
             VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9)",
        )?
        .execute(params![
            call.call_id as i64,
            call.round as i64,
            call.agent,
            call.mode.as_str(),
            call.recommender,
            call.k as i64,
            call.candidates as i64,
            call.followee_candidates as i64,
            call.followee_returned as i64,
        ])?;
        {
            let mut stmt =
                tx.prepare_cached("INSERT INTO impressions (call_id, position, content_id) VALUES (?1, ?2, ?3)")?;
            for (i, id) in call.returned.iter().enumerate() {
                stmt.execute(params![call.call_id as i64, i as i64, *id as i64])?;
            }
        }
        tx.commit()?;
        Ok(())
    }

    pub fn save_manifest(&self, client: &str, manifest: &str) -> Result<(), StoreError> {
        self.conn.execute(
            "INSERT INTO run_manifest (client_id, manifest) VALUES (?1, ?2)
             ON CONFLICT(client_id) DO UPDATE SET manifest = excluded.manifest",
            params![client, manifest],
        )?;
        Ok(())
    }

    fn list_column(&self, table: &str, column: &str) -> Result<BTreeMap<u64, Vec<String>>, StoreError> {
        let sql = format!("SELECT content_id, {column} FROM {table} ORDER BY content_id, position");
        let mut stmt = self.conn.prepare(&sql)?;
        let mut out: BTreeMap<u64, Vec<String>> = BTreeMap::new();
        let rows = stmt.query_map([], |r| Ok((r.get::<_, i64>(0)? as u64, r.get::<_, String>(1)?)))?;
        for row in rows {
            let (id, v) = row?;
            out.entry(id).or_default().push(v);
        }
        Ok(out)
    }

    /// Reads every table back, each in insertion order.
    pub fn load(&self) -> Result<StoredState, StoreError> {
        let mut state = StoredState {
            settings: self
                .conn
                .query_row(
                    "SELECT value FROM simulation_settings WHERE key = 'settings'",
                    [],
                    |r| r.get::<_, String>(0),
                )
                .optional()?
                .map(|s| serde_json::from_str(&s))
                .transpose()?,
            ..StoredState::default()
        };

        let mut stmt = self.conn.prepare("SELECT profile FROM user_mgmt ORDER BY rowid")?;
        for row in stmt.query_map([], |r| r.get::<_, String>(0))? {
            state.agents.push(serde_json::from_str(&row?)?);
        }

        let mut mentions = self.list_column("mentions", "agent")?;
        let mut hashtags = self.list_column("hashtags", "tag")?;
        let mut emotions = self.list_column("emotions", "label")?;
        let mut stmt = self.conn.prepare(
            "SELECT id, author, kind, text, thread_root, parent, article, shared_from, round FROM post ORDER BY id",
        )?;
        let rows = stmt.query_map([], |r| {
            Ok((
                r.get::<_, i64>(0)? as u64,
                r.get::<_, String>(1)?,
                r.get::<_, String>(2)?,
                r.get::<_, String>(3)?,
                r.get::<_, i64>(4)? as u64,
                r.get::<_, Option<i64>>(5)?.map(|v| v as u64),
                r.get::<_, Option<i64>>(6)?.map(|v| v as u64),
                r.get::<_, Option<i64>>(7)?.map(|v| v as u64),
                r.get::<_, i64>(8)? as u64,
            ))
        })?;
        for row in rows {
            let (id, author, kind, text, thread_root, parent, article, shared_from, round) = row?;
            state.contents.push(Content {
                id,
                author,
                kind: ContentKind::parse(&kind).ok_or_else(|| corrupt(format!("content kind {kind}")))?,
                text,
                thread_root,
                parent,
                article,
                shared_from,
                round,
                mentions: mentions.remove(&id).unwrap_or_default(),
                hashtags: hashtags.remove(&id).unwrap_or_default(),
                emotions: emotions.remove(&id).unwrap_or_default(),
            });
        }

        let mut stmt = self
            .conn
            .prepare("SELECT agent, content_id, value, round FROM reactions ORDER BY seq")?;
        let rows = stmt.query_map([], |r| {
            Ok((
                r.get::<_, String>(0)?,
                r.get::<_, i64>(1)? as u64,
                r.get::<_, String>(2)?,
                r.get::<_, i64>(3)? as u64,
            ))
        })?;
        for row in rows {
            let (agent, content, value, round) = row?;
            state.reactions.push(Reaction {
                agent,
                content,
                value: ReactionValue::parse(&value).ok_or_else(|| corrupt(format!("reaction {value}")))?,
                round,
            });
        }

        let mut stmt = self
            .conn
            .prepare("SELECT follower, followee, action, round FROM follow ORDER BY seq")?;
        let rows = stmt.query_map([], |r| {
            Ok((
                r.get::<_, String>(0)?,
                r.get::<_, String>(1)?,
                r.get::<_, String>(2)?,
                r.get::<_, i64>(3)? as u64,
            ))
        })?;
        for row in rows {
            let (follower, followee, action, round) = row?;
            state.follows.push(FollowEdge {
                follower,
                followee,
                action: FollowAction::parse(&action).ok_or_else(|| corrupt(format!("follow action {action}")))?,
                round,
            });
        }

        let mut stmt = self
            .conn
            .prepare("SELECT id, name, rss_url, leaning, category FROM websites ORDER BY id")?;
        for row in stmt.query_map([], |r| {
            Ok(Website {
                id: r.get::<_, i64>(0)? as u64,
                name: r.get(1)?,
                rss_url: r.get(2)?,
                leaning: r.get(3)?,
                category: r.get(4)?,
            })
        })? {
            state.websites.push(row?);
        }

        let mut stmt = self
            .conn
            .prepare("SELECT id, website_id, title, summary, link, fetched_round FROM articles ORDER BY id")?;
        for row in stmt.query_map([], |r| {
            Ok(Article {
                id: r.get::<_, i64>(0)? as u64,
                website_id: r.get::<_, i64>(1)? as u64,
                title: r.get(2)?,
                summary: r.get(3)?,
                link: r.get(4)?,
                fetched_round: r.get::<_, i64>(5)? as u64,
            })
        })? {
            state.articles.push(row?);
        }

        state.last_round = self
            .conn
            .query_row("SELECT MAX(round) FROM rounds", [], |r| r.get::<_, Option<i64>>(0))?
            .map(|v| v as u64);

        let mut stmt = self.conn.prepare("SELECT id, role FROM clients ORDER BY rowid")?;
        let rows = stmt.query_map([], |r| Ok((r.get::<_, String>(0)?, r.get::<_, String>(1)?)))?;
        for row in rows {
            let (id, role) = row?;
            let role = match role.as_str() {
                "orchestrator" => ClientRole::Orchestrator,
                "worker" => ClientRole::Worker,
                other => return Err(corrupt(format!("client role {other}"))),
            };
            state.clients.push(ClientInfo {
                id,
                role,
                done_round: None,
            });
        }

        let mut returned: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
        let mut stmt = self
            .conn
            .prepare("SELECT call_id, content_id FROM impressions ORDER BY call_id, position")?;
        for row in stmt.query_map([], |r| Ok((r.get::<_, i64>(0)? as u64, r.get::<_, i64>(1)? as u64)))? {
            let (call, content) = row?;
            returned.entry(call).or_default().push(content);
        }
        let mut stmt = self.conn.prepare(
            "SELECT call_id, round, agent, mode, recommender, k, candidates, followee_candidates, followee_returned
             FROM timeline_calls ORDER BY call_id",
        )?;
        let rows = stmt.query_map([], |r| {
            Ok((
                r.get::<_, i64>(0)? as u64,
                r.get::<_, i64>(1)? as u64,
                r.get::<_, String>(2)?,
                r.get::<_, String>(3)?,
                r.get::<_, String>(4)?,
                r.get::<_, i64>(5)? as u64,
                r.get::<_, i64>(6)? as u64,
                r.get::<_, i64>(7)? as u64,
                r.get::<_, i64>(8)? as u64,
            ))
        })?;
        for row in rows {
            let (call_id, round, agent, mode, recommender, k, candidates, followee_candidates, followee_returned) =
                row?;
            state.timeline_calls.push(TimelineCall {
                call_id,
                round,
                agent,
                mode: TimelineMode::parse(&mode).ok_or_else(|| corrupt(format!("timeline mode {mode}")))?,
                recommender,
                k,
                candidates,
                followee_candidates,
                returned: returned.remove(&call_id).unwrap_or_default(),
                followee_returned,
            });
        }

        let mut stmt = self
            .conn
            .prepare("SELECT client_id, manifest FROM run_manifest ORDER BY client_id")?;
        for row in stmt.query_map([], |r| Ok((r.get::<_, String>(0)?, r.get::<_, String>(1)?)))? {
            let (k, v) = row?;
            state.manifests.insert(k, v);
        }
        Ok(state)
    }
}
