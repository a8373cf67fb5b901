//! Feed catalog ingestion.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use ytwin_core::news::{parse_catalog, CatalogEntry};

use crate::transport::PlatformClient;
use crate::ClientError;

/// File a catalog entry's document is read from in a fixtures directory:
/// the outlet name lowercased, non-alphanumerics collapsed to `-`, `.xml`.
pub fn fixture_name(entry: &CatalogEntry) -> String {
    let mut slug = String::new();
    for c in entry.name.chars() {
        if c.is_alphanumeric() {
            slug.extend(c.to_lowercase());
        } else if !slug.ends_with('-') && !slug.is_empty() {
            slug.push('-');
        }
    }
    format!("{}.xml", slug.trim_end_matches('-'))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FeedsReport {
    pub websites: usize,
    pub new_articles: usize,
    pub malformed_items: u64,
    /// Outlets whose document could not be fetched or parsed, with the reason.
    pub failed: Vec<(String, String)>,
}

pub enum FeedSource {
    Directory(PathBuf),
    Http(reqwest::blocking::Client),
}

impl FeedSource {
    pub fn http() -> Result<Self, ClientError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(20))
            .build()
            .map_err(|e| ClientError::Config(format!("http client: {e}")))?;
        Ok(Self::Http(client))
    }

    fn fetch(&self, entry: &CatalogEntry) -> Result<String, String> {
        match self {
            Self::Directory(dir) => {
                let path = dir.join(fixture_name(entry));
                std::fs::read(&path)
                    .map(|b| String::from_utf8_lossy(&b).into_owned())
                    .map_err(|e| format!("{}: {e}", path.display()))
            }
            Self::Http(client) => client
                .get(&entry.rss_url)
                .send()
                .and_then(|r| r.error_for_status())
                .and_then(|r| r.text())
                .map_err(|e| e.to_string()),
        }
    }
}

/// Reads the catalog at `catalog` and ingests every outlet's current feed.
///
/// A broken outlet is reported and skipped; only an unreadable catalog or an
/// unreachable platform fails the whole call.
pub fn ingest_catalog(api: &PlatformClient, catalog: &Path, source: &FeedSource) -> Result<FeedsReport, ClientError> {
    let text = std::fs::read_to_string(catalog)?;
    let entries = parse_catalog(&text).map_err(|e| ClientError::Config(format!("{}: {e}", catalog.display())))?;
    let mut report = FeedsReport::default();
    for entry in &entries {
        let doc = match source.fetch(entry) {
            Ok(d) => d,
            Err(e) => {
                tracing::warn!(outlet = %entry.name, "feed unavailable: {e}");
                report.failed.push((entry.name.clone(), e));
                continue;
            }
        };
        match api.ingest_feed(entry, &doc) {
            Ok(r) => {
                report.websites += 1;
                report.new_articles += r.new_articles.len();
                report.malformed_items += r.malformed;
            }
            Err(ClientError::Platform(e)) => {
                tracing::warn!(outlet = %entry.name, "feed rejected: {e}");
                report.failed.push((entry.name.clone(), e.to_string()));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}
