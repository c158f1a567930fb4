use std::fmt;
use std::time::Duration;

use async_trait::async_trait;
use reqwest::header::RETRY_AFTER;
use reqwest::StatusCode;
use serde::Deserialize;
use serde_json::json;

use super::config::SystemRole;
use super::{Completion, Decoding, ModelProvider, ProviderError, Usage};

const ERROR_BODY_LIMIT: usize = 512;

/// Client for the chat-completions wire shape (`POST {endpoint}` with a
/// `messages` array and bearer-key auth).
pub struct ChatCompletionsProvider {
    name: String,
    endpoint: String,
    api_key: String,
    decoding: Decoding,
    system_role: SystemRole,
    client: reqwest::Client,
}

impl fmt::Debug for ChatCompletionsProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChatCompletionsProvider")
            .field("name", &self.name)
            .field("endpoint", &self.endpoint)
            .field("decoding", &self.decoding)
            .field("system_role", &self.system_role)
            .finish_non_exhaustive()
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    prompt_tokens: Option<u64>,
    completion_tokens: Option<u64>,
}

impl ChatCompletionsProvider {
    pub fn new(
        name: impl Into<String>,
        endpoint: impl Into<String>,
        api_key: impl Into<String>,
        decoding: Decoding,
        system_role: SystemRole,
        timeout: Duration,
    ) -> Result<Self, ProviderError> {
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        Ok(ChatCompletionsProvider {
            name: name.into(),
            endpoint: endpoint.into(),
            api_key: api_key.into(),
            decoding,
            system_role,
            client,
        })
    }

    fn messages(&self, system: &str, user: &str) -> serde_json::Value {
        match self.system_role {
            SystemRole::Native => json!([
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ]),
            SystemRole::MergeIntoUser => json!([
                {"role": "user", "content": format!("{system}\n\n{user}")},
            ]),
        }
    }
}

fn transport(e: reqwest::Error) -> ProviderError {
    if e.is_timeout() {
        ProviderError::Timeout
    } else {
        ProviderError::Transport(e.to_string())
    }
}

fn truncate(mut s: String) -> String {
    if s.len() > ERROR_BODY_LIMIT {
        let mut cut = ERROR_BODY_LIMIT;
        while !s.is_char_boundary(cut) {
            cut -= 1;
        }
        s.truncate(cut);
        s.push_str("...");
    }
    s
}

#[async_trait]
impl ModelProvider for ChatCompletionsProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn decoding(&self) -> &Decoding {
        &self.decoding
    }

    async fn complete(&self, system: &str, user: &str) -> Result<Completion, ProviderError> {
        let body = json!({
            "model": self.decoding.model,
            "messages": self.messages(system, user),
            "temperature": self.decoding.temperature,
            "max_tokens": self.decoding.max_output_tokens,
            "stream": false,
        });
        let resp = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .await
            .map_err(transport)?;

        let status = resp.status();
        if !status.is_success() {
            let retry_after = resp
                .headers()
                .get(RETRY_AFTER)
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse::<u64>().ok())
                .map(Duration::from_secs);
            let text = truncate(resp.text().await.unwrap_or_default());
            return Err(match status {
                StatusCode::UNAUTHORIZED | StatusCode::FORBIDDEN => ProviderError::Auth { status: status.as_u16() },
                StatusCode::TOO_MANY_REQUESTS => ProviderError::RateLimited { retry_after },
                StatusCode::REQUEST_TIMEOUT | StatusCode::GATEWAY_TIMEOUT => ProviderError::Timeout,
                s if s.is_server_error() => ProviderError::Server {
                    status: s.as_u16(),
                    body: text,
                },
                s => ProviderError::Rejected {
                    status: s.as_u16(),
                    body: text,
                },
            });
        }

        let bytes = resp.bytes().await.map_err(transport)?;
        let parsed: ChatResponse =
            serde_json::from_slice(&bytes).map_err(|e| ProviderError::Malformed(format!("response body: {e}")))?;
        let usage = parsed
            .usage
            .map(|u| Usage {
                prompt_tokens: u.prompt_tokens,
                completion_tokens: u.completion_tokens,
            })
            .unwrap_or_default();
        let text = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| ProviderError::Malformed("no message content in first choice".into()))?;
        Ok(Completion { text, usage })
    }
}
