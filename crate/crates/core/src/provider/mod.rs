//! Chat-completion backends behind one trait, plus record/replay of
//! transcripts keyed by a request hash.

mod config;
mod openai;
mod replay;
mod retry;

use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{ConfigError, ProviderConfig, ProviderKind, ProvidersFile, SystemRole, API_KEY_ENV};
pub use openai::ChatCompletionsProvider;
pub use replay::{RecordingProvider, ReplayProvider, ReplayStore, StoreError};
pub use retry::{Attempts, RetryHint, RetryPolicy, Retryable};

/// Decoding parameters that enter the request hash. Temperature is always 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decoding {
    pub model: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl Decoding {
    pub fn new(model: impl Into<String>, max_output_tokens: u32) -> Self {
        Decoding {
            model: model.into(),
            temperature: 0.0,
            max_output_tokens,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_tokens: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completion_tokens: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub usage: Usage,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptMetadata {
    #[serde(default)]
    pub latency_ms: u64,
    #[serde(flatten)]
    pub usage: Usage,
}

/// One stored completion. A replay store is a JSON-lines file of these.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub request_hash: String,
    pub response_text: String,
    #[serde(default)]
    pub metadata: TranscriptMetadata,
    /// Free-form label for hand-maintained stores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProviderError {
    #[error("authentication rejected (HTTP {status})")]
    Auth { status: u16 },
    #[error("rate limited")]
    RateLimited { retry_after: Option<Duration> },
    #[error("request timed out")]
    Timeout,
    #[error("server error (HTTP {status}): {body}")]
    Server { status: u16, body: String },
    #[error("request rejected (HTTP {status}): {body}")]
    Rejected { status: u16, body: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("missing fixture for request {hash}")]
    MissingFixture { hash: String },
    #[error("recording failed: {0}")]
    Record(String),
}

impl Retryable for ProviderError {
    fn retry_hint(&self) -> RetryHint {
        match self {
            ProviderError::RateLimited { retry_after: Some(d) } => RetryHint::After(*d),
            ProviderError::RateLimited { retry_after: None }
            | ProviderError::Timeout
            | ProviderError::Server { .. }
            | ProviderError::Transport(_) => RetryHint::Retry,
            ProviderError::Auth { .. }
            | ProviderError::Rejected { .. }
            | ProviderError::Malformed(_)
            | ProviderError::MissingFixture { .. }
            | ProviderError::Record(_) => RetryHint::Stop,
        }
    }
}

#[async_trait]
pub trait ModelProvider: Send + Sync {
    fn name(&self) -> &str;

    fn decoding(&self) -> &Decoding;

    /// Whether completions come from a replay store.
    fn replay_mode(&self) -> bool {
        false
    }

    async fn complete(&self, system: &str, user: &str) -> Result<Completion, ProviderError>;
}

/// SHA-256 over length-prefixed system text, user text and decoding
/// parameters, hex encoded.
pub fn request_hash(system: &str, user: &str, decoding: &Decoding) -> String {
    let mut h = Sha256::new();
    let temperature = format!("{:?}", decoding.temperature);
    let max_tokens = decoding.max_output_tokens.to_string();
    for part in [
        "autocombat-request-v1",
        system,
        user,
        decoding.model.as_str(),
        temperature.as_str(),
        max_tokens.as_str(),
    ] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_pure_and_sensitive() {
        let d = Decoding::new("m", 100);
        let a = request_hash("s", "u", &d);
        assert_eq!(a, request_hash("s", "u", &d));
        assert_eq!(a.len(), 64);
        assert_ne!(a, request_hash("s", "u ", &d));
        assert_ne!(a, request_hash("su", "", &d));
        assert_ne!(a, request_hash("s", "u", &Decoding::new("m", 101)));
        assert_ne!(a, request_hash("s", "u", &Decoding::new("n", 100)));
    }

    #[test]
    fn length_prefix_separates_fields() {
        let d = Decoding::new("m", 1);
        assert_ne!(request_hash("ab", "c", &d), request_hash("a", "bc", &d));
    }

    #[test]
    fn retry_classes() {
        assert_eq!(ProviderError::Auth { status: 401 }.retry_hint(), RetryHint::Stop);
        assert_eq!(ProviderError::Timeout.retry_hint(), RetryHint::Retry);
        assert_eq!(
            ProviderError::RateLimited {
                retry_after: Some(Duration::from_secs(2))
            }
            .retry_hint(),
            RetryHint::After(Duration::from_secs(2))
        );
        assert_eq!(ProviderError::MissingFixture { hash: "x".into() }.retry_hint(), RetryHint::Stop);
    }
}
