//! JSON wire protocol of the platform server.
//!
//! Every endpoint takes a JSON object and answers with a JSON object. Errors
//! are `{"error": <code>, "detail": <message>}` with a 4xx status (5xx for
//! storage failures). [`dispatch`] is the single entry point used by the HTTP
//! server; clients reuse the request and response types.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::domain::{AgentProfile, Content, ContentKind, FollowAction, ReactionValue, RoundClock};
use crate::news::{Article, CatalogEntry, Website};
use crate::platform::{
    ClientInfo, ClientRole, IngestReport, NewContent, Platform, PlatformError, SimulationSettings, TimelineItem,
    TimelineMode,
};
use crate::recommenders::{ContentRecommender, ContentVariant, FollowRecommender, FollowVariant, Suggestion};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub detail: String,
}

impl From<&PlatformError> for ErrorBody {
    fn from(e: &PlatformError) -> Self {
        Self {
            error: e.code().to_string(),
            detail: e.to_string(),
        }
    }
}

/// HTTP status for an error code.
pub fn status_for(e: &PlatformError) -> u16 {
    match e {
        PlatformError::UnknownAuthor(_)
        | PlatformError::UnknownAgent(_)
        | PlatformError::UnknownContent(_)
        | PlatformError::UnknownClient(_) => 404,
        PlatformError::DuplicateName(_)
        | PlatformError::BarrierPending(_)
        | PlatformError::ClockDesync { .. }
        | PlatformError::ConfigMismatch(_) => 409,
        PlatformError::UnauthorizedAdvance(_) => 403,
        PlatformError::Storage(_) => 500,
        _ => 422,
    }
}

/// Rebuilds a [`PlatformError`] from an error response.
pub fn error_from_body(body: &ErrorBody) -> PlatformError {
    let d = body.detail.clone();
    match body.error.as_str() {
        "DuplicateName" => PlatformError::DuplicateName(d),
        "InvalidProfile" => PlatformError::InvalidProfile(d),
        "UnknownAuthor" => PlatformError::UnknownAuthor(d),
        "UnknownAgent" => PlatformError::UnknownAgent(d),
        "UnknownContent" => PlatformError::UnknownContent(0),
        "DanglingReference" => PlatformError::DanglingReference(d),
        "KindFieldMismatch" => PlatformError::KindFieldMismatch(d),
        "InvalidEmotion" => PlatformError::InvalidEmotion(d),
        "SelfFollow" => PlatformError::SelfFollow(d),
        "UnknownRecommender" => PlatformError::UnknownRecommender(d),
        "UnauthorizedAdvance" => PlatformError::UnauthorizedAdvance(d),
        "BarrierPending" => PlatformError::BarrierPending(Vec::new()),
        "ClockDesync" => PlatformError::ClockDesync {
            reported: 0,
            current: 0,
        },
        "UnknownClient" => PlatformError::UnknownClient(d),
        "ConfigMismatch" => PlatformError::ConfigMismatch(d),
        "UnparseableFeed" => PlatformError::UnparseableFeed(d),
        "Storage" => PlatformError::Storage(d),
        _ => PlatformError::InvalidRequest(d),
    }
}

// ---- requests and responses ---------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisterAgentRequest {
    pub profile: AgentProfile,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterAgentResponse {
    pub name: String,
    pub joined_round: u64,
}

/// Body of `/post`, `/comment`, `/news` and `/share`; the endpoint fixes the kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublishRequest {
    pub author: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub article: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shared_from: Option<u64>,
    #[serde(default)]
    pub emotions: Vec<String>,
}

impl PublishRequest {
    pub fn into_content(self, kind: ContentKind) -> NewContent {
        NewContent {
            author: self.author,
            kind,
            text: self.text,
            parent: self.parent,
            article: self.article,
            shared_from: self.shared_from,
            emotions: self.emotions,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublishResponse {
    pub id: u64,
    pub round: u64,
}

/// Body of `/read`. The recommender stays untyped until [`content_recommender`]
/// can tell an unknown id apart from a malformed body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadRequest {
    pub agent: String,
    pub recommender: Value,
    #[serde(default = "read_mode")]
    pub mode: TimelineMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kinds: Option<Vec<ContentKind>>,
}

fn read_mode() -> TimelineMode {
    TimelineMode::Read
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadResponse {
    pub items: Vec<TimelineItem>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReactionRequest {
    pub agent: String,
    pub content: u64,
    pub value: ReactionValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FollowRequest {
    pub follower: String,
    pub followee: String,
    pub action: FollowAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FollowSuggestionsRequest {
    pub agent: String,
    pub recommender: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FollowSuggestionsResponse {
    pub suggestions: Vec<Suggestion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisterClientRequest {
    pub client: String,
    pub role: ClientRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settings: Option<SimulationSettings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisterClientResponse {
    pub client: ClientInfo,
    pub clock: RoundClock,
    pub settings: SimulationSettings,
    pub clients: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClientRequest {
    pub client: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotDoneRequest {
    pub client: String,
    pub round: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentsRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owner: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentsResponse {
    pub agents: Vec<AgentProfile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreadRequest {
    pub content: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreadResponse {
    pub path: Vec<Content>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PickArticleRequest {
    pub agent: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PickArticleResponse {
    pub article: Option<Article>,
    pub website: Option<Website>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestFeedRequest {
    pub website: CatalogEntry,
    /// Raw RSS or Atom document.
    pub document: String,
}

pub type IngestFeedResponse = IngestReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRequest {
    pub client: String,
    pub manifest: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub ok: bool,
}

const ACK: Ack = Ack { ok: true };

// ---- recommender parsing -------------------------------------------------

fn recommender_id(value: &Value) -> Result<&str, PlatformError> {
    value
        .get("id")
        .and_then(Value::as_str)
        .ok_or_else(|| PlatformError::InvalidRequest("recommender needs a string id".into()))
}

pub fn content_recommender(value: &Value) -> Result<ContentRecommender, PlatformError> {
    let id = recommender_id(value)?;
    if ContentVariant::parse(id).is_none() {
        return Err(PlatformError::UnknownRecommender(id.to_string()));
    }
    let rec: ContentRecommender = serde_json::from_value(value.clone())
        .map_err(|e| PlatformError::InvalidRequest(format!("recommender: {e}")))?;
    rec.validate().map_err(PlatformError::InvalidRequest)?;
    Ok(rec)
}

pub fn follow_recommender(value: &Value) -> Result<FollowRecommender, PlatformError> {
    let id = recommender_id(value)?;
    if FollowVariant::parse(id).is_none() {
        return Err(PlatformError::UnknownRecommender(id.to_string()));
    }
    let rec: FollowRecommender = serde_json::from_value(value.clone())
        .map_err(|e| PlatformError::InvalidRequest(format!("recommender: {e}")))?;
    rec.validate().map_err(PlatformError::InvalidRequest)?;
    Ok(rec)
}

// ---- dispatch -------------------------------------------------------------

pub const ENDPOINTS: &[&str] = &[
    "read",
    "reply",
    "post",
    "comment",
    "news",
    "share",
    "reaction",
    "follow_suggestions",
    "follow",
    "register_agent",
    "current_slot",
    "advance_slot",
    "register_client",
    "slot_done",
    "agents",
    "thread",
    "pick_article",
    "ingest_feed",
    "manifest",
    "audit",
];

fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, PlatformError> {
    let body = if body.iter().all(u8::is_ascii_whitespace) {
        b"{}" as &[u8]
    } else {
        body
    };
    serde_json::from_slice(body).map_err(|e| PlatformError::InvalidRequest(e.to_string()))
}

fn reply<T: Serialize>(value: T) -> Result<Value, PlatformError> {
    serde_json::to_value(value).map_err(|e| PlatformError::InvalidRequest(e.to_string()))
}

fn publish(platform: &mut Platform, body: &[u8], kind: ContentKind) -> Result<Value, PlatformError> {
    let req: PublishRequest = parse(body)?;
    let id = platform.publish(req.into_content(kind))?;
    reply(PublishResponse {
        id,
        round: platform.clock().round,
    })
}

fn timeline(platform: &mut Platform, body: &[u8], force_mode: Option<TimelineMode>) -> Result<Value, PlatformError> {
    let req: ReadRequest = parse(body)?;
    let rec = content_recommender(&req.recommender)?;
    let mode = force_mode.unwrap_or(req.mode);
    let items = platform.timeline(&req.agent, &rec, mode, req.kinds.as_deref())?;
    reply(ReadResponse { items })
}

/// Executes one request against `platform`. `endpoint` has no leading slash.
pub fn dispatch(platform: &mut Platform, endpoint: &str, body: &[u8]) -> Result<Value, PlatformError> {
    match endpoint {
        "read" => timeline(platform, body, None),
        "reply" => timeline(platform, body, Some(TimelineMode::Reply)),
        "post" => publish(platform, body, ContentKind::Post),
        "comment" => publish(platform, body, ContentKind::Comment),
        "news" => publish(platform, body, ContentKind::News),
        "share" => publish(platform, body, ContentKind::Share),
        "reaction" => {
            let req: ReactionRequest = parse(body)?;
            platform.react(&req.agent, req.content, req.value)?;
            reply(ACK)
        }
        "follow" => {
            let req: FollowRequest = parse(body)?;
            platform.set_follow(&req.follower, &req.followee, req.action)?;
            reply(ACK)
        }
        "follow_suggestions" => {
            let req: FollowSuggestionsRequest = parse(body)?;
            let rec = follow_recommender(&req.recommender)?;
            let suggestions = platform.follow_candidates(&req.agent, &rec)?;
            reply(FollowSuggestionsResponse { suggestions })
        }
        "register_agent" => {
            let req: RegisterAgentRequest = parse(body)?;
            let name = platform.register_agent(req.profile)?;
            reply(RegisterAgentResponse {
                name,
                joined_round: platform.clock().round,
            })
        }
        "current_slot" => reply(platform.clock()),
        "advance_slot" => {
            let req: ClientRequest = parse(body)?;
            reply(platform.advance_slot(&req.client)?)
        }
        "slot_done" => {
            let req: SlotDoneRequest = parse(body)?;
            reply(platform.slot_done(&req.client, req.round)?)
        }
        "register_client" => {
            let req: RegisterClientRequest = parse(body)?;
            let client = platform.register_client(&req.client, req.role, req.settings)?;
            reply(RegisterClientResponse {
                client,
                clock: platform.clock(),
                settings: platform.settings().clone(),
                clients: platform.clients().count(),
            })
        }
        "agents" => {
            let req: AgentsRequest = parse(body)?;
            let agents = match &req.owner {
                Some(owner) => platform.agents_owned_by(owner).cloned().collect(),
                None => platform.agents().cloned().collect(),
            };
            reply(AgentsResponse { agents })
        }
        "thread" => {
            let req: ThreadRequest = parse(body)?;
            let path = platform.thread_path(req.content)?.into_iter().cloned().collect();
            reply(ThreadResponse { path })
        }
        "pick_article" => {
            let req: PickArticleRequest = parse(body)?;
            let pref = platform
                .agent(&req.agent)
                .ok_or_else(|| PlatformError::UnknownAgent(req.agent.clone()))?
                .news_preference
                .clone();
            let picked = platform.pick_article(&pref, req.seed);
            let (article, website) = match picked {
                Some((a, w)) => (Some(a), Some(w)),
                None => (None, None),
            };
            reply(PickArticleResponse { article, website })
        }
        "ingest_feed" => {
            let req: IngestFeedRequest = parse(body)?;
            reply(platform.ingest_feed(&req.website, req.document.as_bytes())?)
        }
        "manifest" => {
            let req: ManifestRequest = parse(body)?;
            let text =
                serde_json::to_string(&req.manifest).map_err(|e| PlatformError::InvalidRequest(e.to_string()))?;
            platform.save_manifest(&req.client, &text)?;
            reply(ACK)
        }
        "audit" => reply(platform.audit()),
        other => Err(PlatformError::InvalidRequest(format!("no endpoint /{other}"))),
    }
}
