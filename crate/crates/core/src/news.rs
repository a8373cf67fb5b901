//! News outlets, RSS/Atom ingestion and article selection.

use std::collections::{BTreeMap, HashSet};

use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::NewsPreference;
use crate::seed;

pub const UNKNOWN_LEANING: &str = "UNKNOWN";

fn unknown_leaning() -> String {
    UNKNOWN_LEANING.to_string()
}

/// One line of a feed catalog file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    pub rss_url: String,
    #[serde(default = "unknown_leaning")]
    pub leaning: String,
    pub category: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Website {
    pub id: u64,
    pub name: String,
    pub rss_url: String,
    pub leaning: String,
    pub category: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub id: u64,
    pub website_id: u64,
    pub title: String,
    pub summary: String,
    pub link: String,
    pub fetched_round: u64,
}

/// An item extracted from a feed document, before it is stored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedItem {
    pub title: String,
    pub summary: String,
    pub link: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedFeed {
    pub items: Vec<FeedItem>,
    /// Items skipped for lacking a link or a title.
    pub malformed: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NewsError {
    #[error("document is neither RSS nor Atom: {0}")]
    UnparseableFeed(String),
    #[error("catalog line {line}: {detail}")]
    Catalog { line: usize, detail: String },
    #[error("unknown website {0}")]
    UnknownWebsite(u64),
}

/// Parses a catalog file: one JSON object per line, blank lines and `#` comments ignored.
pub fn parse_catalog(text: &str) -> Result<Vec<CatalogEntry>, NewsError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let entry: CatalogEntry = serde_json::from_str(line).map_err(|e| NewsError::Catalog {
            line: i + 1,
            detail: e.to_string(),
        })?;
        if entry.rss_url.trim().is_empty() {
            return Err(NewsError::Catalog {
                line: i + 1,
                detail: "empty rss_url".into(),
            });
        }
        out.push(entry);
    }
    Ok(out)
}

fn strip_markup(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_tag = false;
    for c in s.chars() {
        match c {
            '<' => in_tag = true,
            '>' if in_tag => in_tag = false,
            c if !in_tag => out.push(c),
            _ => {}
        }
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Extracts the items of an RSS (0.9x, 1.0, 2.0) or Atom document.
///
/// A missing description yields an empty summary. Items without a link or
/// title are counted in `malformed` and dropped.
pub fn parse_feed(document: &[u8]) -> Result<ParsedFeed, NewsError> {
    let feed = feed_rs::parser::parse(document).map_err(|e| NewsError::UnparseableFeed(e.to_string()))?;
    if feed.feed_type == feed_rs::model::FeedType::JSON {
        return Err(NewsError::UnparseableFeed("JSON Feed is not supported".into()));
    }
    let mut parsed = ParsedFeed::default();
    for entry in feed.entries {
        let link = entry
            .links
            .first()
            .map(|l| l.href.trim().to_string())
            .unwrap_or_default();
        let title = entry.title.map(|t| strip_markup(&t.content)).unwrap_or_default();
        if link.is_empty() || title.is_empty() {
            parsed.malformed += 1;
            continue;
        }
        let summary = entry.summary.map(|t| strip_markup(&t.content)).unwrap_or_default();
        parsed.items.push(FeedItem { title, summary, link });
    }
    Ok(parsed)
}

/// Websites and their articles.
#[derive(Debug, Clone, Default)]
pub struct NewsCatalog {
    websites: BTreeMap<u64, Website>,
    by_url: BTreeMap<String, u64>,
    articles: Vec<Article>,
    seen: HashSet<(u64, String)>,
}

impl NewsCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers an outlet, returning the existing record when the URL is known.
    pub fn upsert_website(&mut self, entry: &CatalogEntry) -> (Website, bool) {
        if let Some(id) = self.by_url.get(&entry.rss_url) {
            return (self.websites[id].clone(), false);
        }
        let id = self.websites.len() as u64 + 1;
        let site = Website {
            id,
            name: entry.name.clone(),
            rss_url: entry.rss_url.clone(),
            leaning: entry.leaning.clone(),
            category: entry.category.clone(),
        };
        self.insert_website(site.clone());
        (site, true)
    }

    pub fn insert_website(&mut self, site: Website) {
        self.by_url.insert(site.rss_url.clone(), site.id);
        self.websites.insert(site.id, site);
    }

    /// Restores a stored article (no dedup checks beyond the key set).
    pub fn insert_article(&mut self, article: Article) {
        self.seen.insert((article.website_id, article.link.clone()));
        self.articles.push(article);
    }

    /// Stores the items not seen before for `website_id`, returning the new articles.
    pub fn ingest(&mut self, website_id: u64, items: &[FeedItem], round: u64) -> Result<Vec<Article>, NewsError> {
        if !self.websites.contains_key(&website_id) {
            return Err(NewsError::UnknownWebsite(website_id));
        }
        let mut fresh = Vec::new();
        for item in items {
            if !self.seen.insert((website_id, item.link.clone())) {
                continue;
            }
            let article = Article {
                id: self.articles.len() as u64 + 1,
                website_id,
                title: item.title.clone(),
                summary: item.summary.clone(),
                link: item.link.clone(),
                fetched_round: round,
            };
            self.articles.push(article.clone());
            fresh.push(article);
        }
        Ok(fresh)
    }

    pub fn website(&self, id: u64) -> Option<&Website> {
        self.websites.get(&id)
    }

    pub fn article(&self, id: u64) -> Option<&Article> {
        self.articles.get((id as usize).checked_sub(1)?)
    }

    pub fn websites(&self) -> impl Iterator<Item = &Website> {
        self.websites.values()
    }

    pub fn articles(&self) -> &[Article] {
        &self.articles
    }

    fn matches(&self, article: &Article, pref: &NewsPreference) -> bool {
        let Some(site) = self.websites.get(&article.website_id) else {
            return false;
        };
        pref.category
            .as_ref()
            .is_none_or(|c| site.category.eq_ignore_ascii_case(c))
            && pref
                .leaning
                .as_ref()
                .is_none_or(|l| site.leaning.eq_ignore_ascii_case(l))
    }

    /// Seeded-uniform pick among the articles that best fit the request.
    ///
    /// Pools are tried in order: fetched during `day_rounds` and matching the
    /// preference; matching the preference; fetched during `day_rounds`; any.
    pub fn pick_article(
        &self,
        preference: &NewsPreference,
        day_rounds: std::ops::Range<u64>,
        seed: u64,
    ) -> Option<&Article> {
        let today = |a: &&Article| day_rounds.contains(&a.fetched_round);
        let liked = |a: &&Article| self.matches(a, preference);
        let pools: [Vec<&Article>; 4] = [
            self.articles.iter().filter(today).filter(liked).collect(),
            self.articles.iter().filter(liked).collect(),
            self.articles.iter().filter(today).collect(),
            self.articles.iter().collect(),
        ];
        let pool = pools.into_iter().find(|p| !p.is_empty())?;
        let mut rng = seed::rng(seed);
        pool.choose(&mut rng).copied()
    }
}
