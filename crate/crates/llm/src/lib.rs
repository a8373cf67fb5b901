//! LLM access for ytwin agents.
//!
//! [`LlmGateway`] is the one call every agent action goes through. Two
//! implementations ship: [`HttpGateway`] for any OpenAI-compatible
//! chat-completions endpoint and [`MockLlm`], a seeded offline model that
//! answers the seven handler templates. [`ModelRouter`] resolves each
//! agent's model name to a gateway at call time.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod http;
pub mod mock;
pub mod parse;
pub mod prompts;
pub mod wire;

pub use http::{HttpGateway, LlmEndpoint};
pub use mock::MockLlm;
pub use prompts::{build_preprompt, BigFiveLabels, TemplateKind};

/// Optional sampling extras forwarded with every request.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SamplingOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// A system prompt (role-play directives) plus one action prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub system: String,
    pub user: String,
    #[serde(default)]
    pub options: SamplingOptions,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub finish_reason: Option<String>,
}

/// Who is calling and when; only the mock reads it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct CallContext {
    pub agent_seed: u64,
    pub round: u64,
    /// Position of this call among the agent's calls in the round.
    pub call_index: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("endpoint unavailable after {attempts} attempts: {last}")]
    EndpointUnavailable { attempts: u32, last: String },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("request rejected: {0}")]
    Rejected(String),
    #[error("prompt matches no known template")]
    UnrecognizedTemplate,
    #[error("invalid endpoint: {0}")]
    InvalidEndpoint(String),
    #[error("no gateway for model {0:?}")]
    UnknownModel(String),
}

pub trait LlmGateway: Send + Sync {
    fn complete(&self, req: &ChatRequest, ctx: &CallContext) -> Result<ChatResponse, LlmError>;
}

impl<T: LlmGateway + ?Sized> LlmGateway for Arc<T> {
    fn complete(&self, req: &ChatRequest, ctx: &CallContext) -> Result<ChatResponse, LlmError> {
        (**self).complete(req, ctx)
    }
}

/// Routes requests by `ChatRequest::model`, falling back to a default gateway.
#[derive(Clone, Default)]
pub struct ModelRouter {
    routes: BTreeMap<String, Arc<dyn LlmGateway>>,
    fallback: Option<Arc<dyn LlmGateway>>,
}

impl std::fmt::Debug for ModelRouter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelRouter")
            .field("models", &self.routes.keys().collect::<Vec<_>>())
            .field("fallback", &self.fallback.is_some())
            .finish()
    }
}

impl ModelRouter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn route(mut self, model: impl Into<String>, gateway: Arc<dyn LlmGateway>) -> Self {
        self.routes.insert(model.into(), gateway);
        self
    }

    pub fn fallback(mut self, gateway: Arc<dyn LlmGateway>) -> Self {
        self.fallback = Some(gateway);
        self
    }
}

impl LlmGateway for ModelRouter {
    fn complete(&self, req: &ChatRequest, ctx: &CallContext) -> Result<ChatResponse, LlmError> {
        let gw = self
            .routes
            .get(&req.model)
            .or(self.fallback.as_ref())
            .ok_or_else(|| LlmError::UnknownModel(req.model.clone()))?;
        gw.complete(req, ctx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed(&'static str);
    impl LlmGateway for Fixed {
        fn complete(&self, _: &ChatRequest, _: &CallContext) -> Result<ChatResponse, LlmError> {
            Ok(ChatResponse {
                text: self.0.into(),
                finish_reason: None,
            })
        }
    }

    #[test]
    fn router_resolves_per_model() {
        let r = ModelRouter::new()
            .route("llama3", Arc::new(Fixed("a")))
            .fallback(Arc::new(Fixed("b")));
        let mut req = ChatRequest {
            model: "llama3".into(),
            system: String::new(),
            user: String::new(),
            options: SamplingOptions::default(),
        };
        assert_eq!(r.complete(&req, &CallContext::default()).unwrap().text, "a");
        req.model = "mistral".into();
        assert_eq!(r.complete(&req, &CallContext::default()).unwrap().text, "b");
        let bare = ModelRouter::new();
        assert!(matches!(
            bare.complete(&req, &CallContext::default()),
            Err(LlmError::UnknownModel(_))
        ));
    }
}
