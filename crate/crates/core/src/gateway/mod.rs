//! Chat-completion access: live HTTP, fixture playback and a null backend,
//! plus JSON extraction with corrective retries.

mod backends;
mod json;
pub mod prompts;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use backends::{
    load_fixtures, write_fixtures, FixtureRecord, LiveBackend, LiveSettings, NullBackend,
    RecordingBackend, ScriptedBackend, TokenBucket,
};
pub use json::{complete_json, extract_json_object};

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("no messages to send")]
    EmptyMessages,
    #[error("message content is empty")]
    EmptyContent,
    #[error("no fixture for {0}")]
    MissingFixture(FixtureKey),
    #[error("backend disabled")]
    Disabled,
    #[error("request failed after {attempts} attempts: {message}")]
    Http { attempts: usize, message: String },
    #[error("malformed model output ({reason}): {raw}")]
    Malformed { raw: String, reason: String },
    #[error("prompt template: {0}")]
    Template(String),
    #[error("fixture file: {0}")]
    Fixture(String),
}

impl GatewayError {
    /// Anything but malformed output ends the episode.
    pub fn is_fatal(&self) -> bool {
        !matches!(self, GatewayError::Malformed { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// Addresses one model call: which template, which dialogue, which turn,
/// and which retry of that call.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FixtureKey {
    pub template: String,
    pub dialogue: String,
    pub turn: u32,
    #[serde(default)]
    pub attempt: u32,
}

impl FixtureKey {
    pub fn new(template: &str, dialogue: &str, turn: u32) -> Self {
        Self {
            template: template.to_string(),
            dialogue: dialogue.to_string(),
            turn,
            attempt: 0,
        }
    }
}

impl fmt::Display for FixtureKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, turn {}, attempt {})",
            self.template, self.dialogue, self.turn, self.attempt
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionParams {
    pub temperature: f64,
    pub max_tokens: u32,
    pub key: FixtureKey,
}

impl CompletionParams {
    pub fn new(key: FixtureKey) -> Self {
        Self {
            temperature: 0.0,
            max_tokens: 1024,
            key,
        }
    }
}

pub trait ChatBackend: Send + Sync {
    fn complete(
        &self,
        messages: &[ChatMessage],
        params: &CompletionParams,
    ) -> Result<String, GatewayError>;

    /// Whether repeated runs can differ; stamped into run metadata.
    fn deterministic(&self) -> bool {
        true
    }
}

pub(crate) fn check_messages(messages: &[ChatMessage]) -> Result<(), GatewayError> {
    if messages.is_empty() {
        return Err(GatewayError::EmptyMessages);
    }
    if messages.iter().any(|m| m.content.trim().is_empty()) {
        return Err(GatewayError::EmptyContent);
    }
    Ok(())
}

/// A backend plus the decoding settings every caller shares.
#[derive(Clone)]
pub struct Gateway {
    backend: Arc<dyn ChatBackend>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub json_retries: u32,
}

impl fmt::Debug for Gateway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Gateway")
            .field("temperature", &self.temperature)
            .field("max_tokens", &self.max_tokens)
            .field("json_retries", &self.json_retries)
            .finish_non_exhaustive()
    }
}

impl Gateway {
    pub fn new(backend: Arc<dyn ChatBackend>) -> Self {
        Self {
            backend,
            temperature: 0.0,
            max_tokens: 1024,
            json_retries: 2,
        }
    }

    pub fn backend(&self) -> &Arc<dyn ChatBackend> {
        &self.backend
    }

    fn params(&self, key: FixtureKey) -> CompletionParams {
        CompletionParams {
            temperature: self.temperature,
            max_tokens: self.max_tokens,
            key,
        }
    }

    pub fn complete(
        &self,
        messages: &[ChatMessage],
        key: FixtureKey,
    ) -> Result<String, GatewayError> {
        self.backend.complete(messages, &self.params(key))
    }

    pub fn complete_json<T>(
        &self,
        messages: &[ChatMessage],
        key: FixtureKey,
        validate: impl Fn(&serde_json::Value) -> Result<T, String>,
    ) -> Result<T, GatewayError> {
        complete_json(
            self.backend.as_ref(),
            messages,
            &self.params(key),
            self.json_retries,
            validate,
        )
    }
}
