//! OpenAI chat-completions wire format.

use serde::{Deserialize, Serialize};

use crate::{ChatRequest, ChatResponse, LlmError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireMessage {
    pub role: String,
    #[serde(default)]
    pub content: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model: String,
    pub messages: Vec<WireMessage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl CompletionRequest {
    pub fn from_chat(req: &ChatRequest, model: &str) -> Self {
        Self {
            model: model.to_string(),
            messages: vec![
                WireMessage {
                    role: "system".into(),
                    content: Some(req.system.clone()),
                },
                WireMessage {
                    role: "user".into(),
                    content: Some(req.user.clone()),
                },
            ],
            temperature: req.options.temperature,
            top_p: req.options.top_p,
            max_tokens: req.options.max_tokens,
            seed: req.options.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct CompletionChoice {
    #[serde(default)]
    pub index: u32,
    pub message: Option<WireMessage>,
    #[serde(default)]
    pub finish_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct CompletionResponse {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub choices: Vec<CompletionChoice>,
}

/// Extracts the first choice's text from a response body.
pub fn parse_completion(body: &[u8]) -> Result<ChatResponse, LlmError> {
    let resp: CompletionResponse =
        serde_json::from_slice(body).map_err(|e| LlmError::MalformedResponse(e.to_string()))?;
    let choice = resp
        .choices
        .into_iter()
        .next()
        .ok_or_else(|| LlmError::MalformedResponse("no choices".into()))?;
    let text = choice
        .message
        .and_then(|m| m.content)
        .ok_or_else(|| LlmError::MalformedResponse("choice has no message content".into()))?;
    Ok(ChatResponse {
        text,
        finish_reason: choice.finish_reason,
    })
}
