//! Analysis datasets derived from a finished simulation.
//!
//! All files are CSV with a header row, rows sorted by their key columns, so
//! identical stores produce byte-identical exports.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::domain::{ContentKind, ReactionValue};
use crate::platform::Platform;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("the store holds no agents and no contents")]
    EmptyStore,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AgentCounts {
    pub agent: String,
    pub joined_round: u64,
    pub posts: u64,
    pub comments: u64,
    pub news: u64,
    pub shares: u64,
    pub unique_hashtags: u64,
    pub mentions_made: u64,
    pub mentions_received: u64,
    pub likes_given: u64,
    pub dislikes_given: u64,
    pub likes_received: u64,
    pub dislikes_received: u64,
    pub followers: u64,
    pub followees: u64,
}

impl AgentCounts {
    /// Thread-starting contents: posts, news posts and shares.
    pub fn roots(&self) -> u64 {
        self.posts + self.news + self.shares
    }
}

/// Per-agent activity totals, ordered by agent name.
pub fn agent_counts(p: &Platform) -> Vec<AgentCounts> {
    let mut rows: BTreeMap<&str, AgentCounts> = p
        .agents()
        .map(|a| {
            (
                a.name.as_str(),
                AgentCounts {
                    agent: a.name.clone(),
                    joined_round: a.joined_round,
                    followers: p.graph().followers(&a.name).len() as u64,
                    followees: p.graph().followees(&a.name).len() as u64,
                    ..AgentCounts::default()
                },
            )
        })
        .collect();
    let mut tags: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for c in p.contents() {
        if let Some(row) = rows.get_mut(c.author.as_str()) {
            match c.kind {
                ContentKind::Post => row.posts += 1,
                ContentKind::Comment => row.comments += 1,
                ContentKind::News => row.news += 1,
                ContentKind::Share => row.shares += 1,
            }
            row.mentions_made += c.mentions.len() as u64;
            tags.entry(c.author.as_str())
                .or_default()
                .extend(c.hashtags.iter().map(String::as_str));
        }
        for m in &c.mentions {
            if let Some(row) = rows.get_mut(m.as_str()) {
                row.mentions_received += 1;
            }
        }
    }
    for (agent, set) in tags {
        if let Some(row) = rows.get_mut(agent) {
            row.unique_hashtags = set.len() as u64;
        }
    }
    for r in p.reactions() {
        let like = r.value == ReactionValue::Like;
        if let Some(row) = rows.get_mut(r.agent.as_str()) {
            if like {
                row.likes_given += 1
            } else {
                row.dislikes_given += 1
            }
        }
        let author = p.content(r.content).map(|c| c.author.as_str());
        if let Some(row) = author.and_then(|a| rows.get_mut(a)) {
            if like {
                row.likes_received += 1
            } else {
                row.dislikes_received += 1
            }
        }
    }
    rows.into_values().collect()
}

/// Empirical complementary CDF `P(X >= x)` at every distinct observed `x`.
pub fn ccdf(values: &[u64]) -> Vec<(u64, f64)> {
    if values.is_empty() {
        return Vec::new();
    }
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for v in values {
        *counts.entry(*v).or_default() += 1;
    }
    let n = values.len() as f64;
    let mut remaining = values.len() as u64;
    let mut out = Vec::with_capacity(counts.len());
    for (x, c) in counts {
        out.push((x, remaining as f64 / n));
        remaining -= c;
    }
    out
}

/// Number of comments in each thread, keyed by root id; roots without
/// comments have length 0.
pub fn thread_lengths(p: &Platform) -> BTreeMap<u64, u64> {
    let mut out = BTreeMap::new();
    for c in p.contents() {
        let n = out.entry(c.thread_root).or_default();
        if c.kind == ContentKind::Comment {
            *n += 1;
        }
    }
    out
}

fn write_csv<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<(), ExportError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct CcdfRow<'a> {
    metric: &'a str,
    x: u64,
    ccdf: f64,
}

#[derive(Serialize)]
struct RoundReactions {
    round: u64,
    likes: u64,
    dislikes: u64,
}

#[derive(Serialize)]
struct Count<'a> {
    key: &'a str,
    count: u64,
}

#[derive(Serialize)]
struct ThreadLength {
    thread_root: u64,
    length: u64,
}

#[derive(Serialize)]
struct LengthCcdf {
    length: u64,
    ccdf: f64,
}

#[derive(Serialize)]
struct Impressions {
    content_id: u64,
    author: String,
    kind: ContentKind,
    impressions: u64,
}

/// Writes every dataset into `out`, returning the files written.
pub fn export_all(p: &Platform, out: &Path) -> Result<Vec<PathBuf>, ExportError> {
    if p.agents().next().is_none() && p.contents().is_empty() {
        return Err(ExportError::EmptyStore);
    }
    fs::create_dir_all(out)?;
    let mut written = Vec::new();
    let mut file = |name: &str| {
        let path = out.join(name);
        written.push(path.clone());
        path
    };

    let counts = agent_counts(p);
    write_csv(&file("agent_counts.csv"), &counts)?;

    type Metric = fn(&AgentCounts) -> u64;
    let metrics: [(&str, Metric); 11] = [
        ("posts", |c| c.posts),
        ("comments", |c| c.comments),
        ("news", |c| c.news),
        ("shares", |c| c.shares),
        ("roots", AgentCounts::roots),
        ("unique_hashtags", |c| c.unique_hashtags),
        ("mentions_made", |c| c.mentions_made),
        ("mentions_received", |c| c.mentions_received),
        ("likes_received", |c| c.likes_received),
        ("followers", |c| c.followers),
        ("followees", |c| c.followees),
    ];
    let mut ccdf_rows = Vec::new();
    for (metric, get) in metrics {
        let values: Vec<u64> = counts.iter().map(get).collect();
        for (x, ccdf) in ccdf(&values) {
            ccdf_rows.push(CcdfRow { metric, x, ccdf });
        }
    }
    write_csv(&file("agent_ccdf.csv"), ccdf_rows)?;

    let mut per_round: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
    for r in p.reactions() {
        let e = per_round.entry(r.round).or_default();
        match r.value {
            ReactionValue::Like => e.0 += 1,
            ReactionValue::Dislike => e.1 += 1,
        }
    }
    write_csv(
        &file("reactions_per_round.csv"),
        per_round
            .into_iter()
            .map(|(round, (likes, dislikes))| RoundReactions { round, likes, dislikes }),
    )?;

    let mut tags: BTreeMap<&str, u64> = BTreeMap::new();
    let mut emotions: BTreeMap<&str, u64> = BTreeMap::new();
    for c in p.contents() {
        for t in &c.hashtags {
            *tags.entry(t).or_default() += 1;
        }
        for e in &c.emotions {
            *emotions.entry(e).or_default() += 1;
        }
    }
    write_csv(
        &file("hashtags.csv"),
        tags.into_iter().map(|(key, count)| Count { key, count }),
    )?;
    write_csv(
        &file("emotions.csv"),
        emotions.into_iter().map(|(key, count)| Count { key, count }),
    )?;

    let lengths = thread_lengths(p);
    let values: Vec<u64> = lengths.values().copied().collect();
    write_csv(
        &file("thread_lengths.csv"),
        lengths
            .iter()
            .map(|(&thread_root, &length)| ThreadLength { thread_root, length }),
    )?;
    write_csv(
        &file("thread_lengths_ccdf.csv"),
        ccdf(&values)
            .into_iter()
            .map(|(length, ccdf)| LengthCcdf { length, ccdf }),
    )?;

    write_csv(
        &file("impressions.csv"),
        p.contents().iter().map(|c| Impressions {
            content_id: c.id,
            author: c.author.clone(),
            kind: c.kind,
            impressions: p.impressions().get(&c.id).copied().unwrap_or(0),
        }),
    )?;

    let manifests: BTreeMap<&str, serde_json::Value> = p
        .manifests()
        .iter()
        .map(|(k, v)| Ok((k.as_str(), serde_json::from_str(v)?)))
        .collect::<Result<_, serde_json::Error>>()?;
    let path = file("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifests)? + "\n")?;

    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::platform::NewContent;
    use crate::test_support::profile;

    #[test]
    fn ccdf_matches_definition() {
        let v = [1, 1, 2, 5];
        assert_eq!(ccdf(&v), vec![(1, 1.0), (2, 0.5), (5, 0.25)]);
        assert!(ccdf(&[]).is_empty());
    }

    #[test]
    fn empty_store_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            export_all(&Platform::in_memory(), dir.path()),
            Err(ExportError::EmptyStore)
        ));
    }

    #[test]
    fn counts_and_files() {
        let mut p = Platform::in_memory();
        p.register_agent(profile("a")).unwrap();
        p.register_agent(profile("b")).unwrap();
        let root = p
            .publish(NewContent {
                author: "a".into(),
                kind: ContentKind::Post,
                text: "#Tag one".into(),
                parent: None,
                article: None,
                shared_from: None,
                emotions: vec!["joy".into()],
            })
            .unwrap();
        p.publish(NewContent {
            author: "b".into(),
            kind: ContentKind::Comment,
            text: "reply #tag @a".into(),
            parent: Some(root),
            article: None,
            shared_from: None,
            emotions: vec![],
        })
        .unwrap();
        p.react("b", root, ReactionValue::Like).unwrap();
        let counts = agent_counts(&p);
        assert_eq!((counts[0].posts, counts[0].likes_received), (1, 1));
        assert_eq!((counts[1].comments, counts[1].likes_given), (1, 1));
        assert_eq!((counts[1].mentions_made, counts[0].mentions_received), (1, 1));
        assert_eq!((counts[0].unique_hashtags, counts[1].unique_hashtags), (1, 1));
        assert_eq!(thread_lengths(&p)[&root], 1);

        let dir = tempfile::tempdir().unwrap();
        let files = export_all(&p, dir.path()).unwrap();
        assert_eq!(files.len(), 9);
        let tags = fs::read_to_string(dir.path().join("hashtags.csv")).unwrap();
        assert_eq!(tags, "key,count\ntag,2\n");
    }
}
