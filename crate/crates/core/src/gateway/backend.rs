use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Decoding parameters. Temperature defaults to 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decoding {
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for Decoding {
    fn default() -> Self {
        Decoding {
            temperature: 0.0,
            max_tokens: 512,
        }
    }
}

/// A fully rendered completion call as seen by a backend.
#[derive(Debug, Clone)]
pub struct BackendRequest<'a> {
    pub template_id: &'a str,
    /// Claim the call belongs to, when known. Mock scripts may key on it.
    pub claim_id: Option<&'a str>,
    pub prompt: &'a str,
    pub model_id: &'a str,
    pub decoding: Decoding,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP status {code}: {body}")]
    Status { code: u16, body: String },
    #[error("malformed backend response: {0}")]
    Protocol(String),
    #[error("no scripted response for template {template_id:?} (claim {claim_id:?})")]
    Unscripted {
        template_id: String,
        claim_id: Option<String>,
    },
    #[error("no scripted embedding for {0:?}")]
    UnscriptedEmbedding(String),
}

impl BackendError {
    /// Worth retrying: connection failures, rate limiting, server errors.
    pub fn is_transient(&self) -> bool {
        match self {
            BackendError::Transport(_) => true,
            BackendError::Status { code, .. } => *code == 429 || *code >= 500,
            _ => false,
        }
    }
}

/// Anything that can answer completion and embedding calls.
pub trait Backend: Send + Sync {
    fn complete(&self, request: &BackendRequest<'_>) -> Result<String, BackendError>;

    fn embed(&self, model_id: &str, text: &str) -> Result<Vec<f64>, BackendError>;

    fn name(&self) -> &str;
}
