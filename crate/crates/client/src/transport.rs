//! Typed access to the platform, over HTTP or in-process.
//!
//! Both transports speak the same JSON bodies: the local one feeds them to
//! `api::dispatch` directly, so a simulation behaves identically whether the
//! platform lives in another process or in this one.

use std::sync::Arc;
use std::thread;
use std::time::Duration;

use parking_lot::Mutex;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use ytwin_core::api::{self, *};
use ytwin_core::news::CatalogEntry;
use ytwin_core::platform::{AuditReport, IngestReport};
use ytwin_core::recommenders::{ContentRecommender, FollowRecommender, Suggestion};
use ytwin_core::{
    AgentProfile, Content, ContentKind, FollowAction, Platform, ReactionValue, RoundClock, SimulationSettings,
    TimelineItem, TimelineMode,
};

use crate::ClientError;

pub trait Transport: Send + Sync {
    /// Sends `body` to `endpoint` (no leading slash) and returns the JSON reply.
    fn call(&self, endpoint: &str, body: &Value) -> Result<Value, ClientError>;
}

/// Runs requests against a platform owned by this process.
#[derive(Clone)]
pub struct LocalTransport {
    platform: Arc<Mutex<Platform>>,
}

impl LocalTransport {
    pub fn new(platform: Arc<Mutex<Platform>>) -> Self {
        Self { platform }
    }
}

impl Transport for LocalTransport {
    fn call(&self, endpoint: &str, body: &Value) -> Result<Value, ClientError> {
        let bytes = serde_json::to_vec(body).expect("values always serialize");
        Ok(api::dispatch(&mut self.platform.lock(), endpoint, &bytes)?)
    }
}

/// Talks to a `ytwin server` over HTTP.
pub struct HttpTransport {
    base: String,
    http: reqwest::blocking::Client,
    retries: u32,
}

impl HttpTransport {
    pub fn new(base: &str) -> Result<Self, ClientError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| ClientError::ServerUnreachable {
                url: base.to_string(),
                detail: e.to_string(),
            })?;
        Ok(Self {
            base: base.trim_end_matches('/').to_string(),
            http,
            retries: 5,
        })
    }
}

impl Transport for HttpTransport {
    fn call(&self, endpoint: &str, body: &Value) -> Result<Value, ClientError> {
        let url = format!("{}/{endpoint}", self.base);
        let mut attempt = 0;
        let resp = loop {
            match self.http.post(&url).json(body).send() {
                Ok(r) => break r,
                // only connection-level failures are retried; the server's
                // own errors are answers
                Err(e) if attempt < self.retries && (e.is_connect() || e.is_timeout()) => {
                    attempt += 1;
                    thread::sleep(Duration::from_millis(50 << attempt));
                }
                Err(e) => {
                    return Err(ClientError::ServerUnreachable {
                        url,
                        detail: e.to_string(),
                    })
                }
            }
        };
        let status = resp.status();
        let bytes = resp.bytes().map_err(|e| ClientError::ServerUnreachable {
            url: url.clone(),
            detail: e.to_string(),
        })?;
        if status.is_success() {
            return serde_json::from_slice(&bytes).map_err(|e| ClientError::Protocol {
                endpoint: endpoint.to_string(),
                detail: e.to_string(),
            });
        }
        match serde_json::from_slice::<ErrorBody>(&bytes) {
            Ok(body) => Err(ClientError::Platform(api::error_from_body(&body))),
            Err(_) => Err(ClientError::Protocol {
                endpoint: endpoint.to_string(),
                detail: format!("status {status}: {}", String::from_utf8_lossy(&bytes)),
            }),
        }
    }
}

/// Typed wrapper over a [`Transport`].
#[derive(Clone)]
pub struct PlatformClient {
    transport: Arc<dyn Transport>,
}

impl PlatformClient {
    pub fn new(transport: Arc<dyn Transport>) -> Self {
        Self { transport }
    }

    pub fn local(platform: Arc<Mutex<Platform>>) -> Self {
        Self::new(Arc::new(LocalTransport::new(platform)))
    }

    pub fn http(base: &str) -> Result<Self, ClientError> {
        Ok(Self::new(Arc::new(HttpTransport::new(base)?)))
    }

    fn request<Req: Serialize, Resp: DeserializeOwned>(&self, endpoint: &str, req: &Req) -> Result<Resp, ClientError> {
        let body = serde_json::to_value(req).expect("request types always serialize");
        let value = self.transport.call(endpoint, &body)?;
        serde_json::from_value(value).map_err(|e| ClientError::Protocol {
            endpoint: endpoint.to_string(),
            detail: e.to_string(),
        })
    }

    pub fn current_slot(&self) -> Result<RoundClock, ClientError> {
        self.request("current_slot", &serde_json::json!({}))
    }

    pub fn register_client(
        &self,
        client: &str,
        role: ytwin_core::ClientRole,
        settings: Option<SimulationSettings>,
    ) -> Result<RegisterClientResponse, ClientError> {
        self.request(
            "register_client",
            &RegisterClientRequest {
                client: client.to_string(),
                role,
                settings,
            },
        )
    }

    pub fn advance_slot(&self, client: &str) -> Result<RoundClock, ClientError> {
        self.request("advance_slot", &ClientRequest { client: client.into() })
    }

    pub fn slot_done(&self, client: &str, round: u64) -> Result<RoundClock, ClientError> {
        self.request(
            "slot_done",
            &SlotDoneRequest {
                client: client.into(),
                round,
            },
        )
    }

    pub fn register_agent(&self, profile: &AgentProfile) -> Result<RegisterAgentResponse, ClientError> {
        self.request(
            "register_agent",
            &RegisterAgentRequest {
                profile: profile.clone(),
            },
        )
    }

    pub fn agents(&self, owner: Option<&str>) -> Result<Vec<AgentProfile>, ClientError> {
        let r: AgentsResponse = self.request(
            "agents",
            &AgentsRequest {
                owner: owner.map(str::to_string),
            },
        )?;
        Ok(r.agents)
    }

    pub fn publish(&self, kind: ContentKind, req: &PublishRequest) -> Result<PublishResponse, ClientError> {
        let endpoint = match kind {
            ContentKind::Post => "post",
            ContentKind::Comment => "comment",
            ContentKind::News => "news",
            ContentKind::Share => "share",
        };
        self.request(endpoint, req)
    }

    pub fn timeline(
        &self,
        agent: &str,
        recommender: &ContentRecommender,
        mode: TimelineMode,
        kinds: Option<Vec<ContentKind>>,
    ) -> Result<Vec<TimelineItem>, ClientError> {
        let req = ReadRequest {
            agent: agent.into(),
            recommender: serde_json::to_value(recommender).expect("recommenders serialize"),
            mode,
            kinds,
        };
        let endpoint = if mode == TimelineMode::Reply { "reply" } else { "read" };
        let r: ReadResponse = self.request(endpoint, &req)?;
        Ok(r.items)
    }

    pub fn react(&self, agent: &str, content: u64, value: ReactionValue) -> Result<(), ClientError> {
        let _: Ack = self.request(
            "reaction",
            &ReactionRequest {
                agent: agent.into(),
                content,
                value,
            },
        )?;
        Ok(())
    }

    pub fn follow(&self, follower: &str, followee: &str, action: FollowAction) -> Result<(), ClientError> {
        let _: Ack = self.request(
            "follow",
            &FollowRequest {
                follower: follower.into(),
                followee: followee.into(),
                action,
            },
        )?;
        Ok(())
    }

    pub fn follow_suggestions(
        &self,
        agent: &str,
        recommender: &FollowRecommender,
    ) -> Result<Vec<Suggestion>, ClientError> {
        let r: FollowSuggestionsResponse = self.request(
            "follow_suggestions",
            &FollowSuggestionsRequest {
                agent: agent.into(),
                recommender: serde_json::to_value(recommender).expect("recommenders serialize"),
            },
        )?;
        Ok(r.suggestions)
    }

    pub fn thread(&self, content: u64) -> Result<Vec<Content>, ClientError> {
        let r: ThreadResponse = self.request("thread", &ThreadRequest { content })?;
        Ok(r.path)
    }

    pub fn pick_article(&self, agent: &str, seed: u64) -> Result<PickArticleResponse, ClientError> {
        self.request(
            "pick_article",
            &PickArticleRequest {
                agent: agent.into(),
                seed,
            },
        )
    }

    pub fn ingest_feed(&self, website: &CatalogEntry, document: &str) -> Result<IngestReport, ClientError> {
        self.request(
            "ingest_feed",
            &IngestFeedRequest {
                website: website.clone(),
                document: document.to_string(),
            },
        )
    }

    pub fn save_manifest(&self, client: &str, manifest: &Value) -> Result<(), ClientError> {
        let _: Ack = self.request(
            "manifest",
            &ManifestRequest {
                client: client.into(),
                manifest: manifest.clone(),
            },
        )?;
        Ok(())
    }

    pub fn audit(&self) -> Result<AuditReport, ClientError> {
        self.request("audit", &serde_json::json!({}))
    }
}
