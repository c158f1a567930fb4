//! TOML provider configuration.
//!
//! ```toml
//! [provider]
//! name = "deepseek"
//! kind = "openai"            # or "replay"
//! endpoint = "https://api.deepseek.com/chat/completions"
//! model = "deepseek-reasoner"
//! timeout_secs = 120
//! max_output_tokens = 4096
//! system_role = "native"     # or "merge": system text prepended to the user turn
//! replay_store = "replay.jsonl"
//! replay_strict = true
//! record = "recorded.jsonl"
//!
//! [providers.gpt]            # further named providers, selected by name
//! kind = "openai"
//! ...
//! ```
//!
//! The API key is read from `AUTOCOMBAT_API_KEY`, or from the file named by
//! `credentials_file`. It is never accepted on the command line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{ChatCompletionsProvider, Decoding, ModelProvider, ProviderError, RecordingProvider, ReplayProvider, ReplayStore, StoreError};

pub const API_KEY_ENV: &str = "AUTOCOMBAT_API_KEY";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {detail}")]
    Io { path: PathBuf, detail: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("provider {provider}: {field}: {reason}")]
    Invalid {
        provider: String,
        field: &'static str,
        reason: String,
    },
    #[error("provider {provider}: no API key (set {API_KEY_ENV} or credentials_file)")]
    MissingKey { provider: String },
    #[error("unknown provider {name:?} (configured: {available})")]
    UnknownProvider { name: String, available: String },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Openai,
    Replay,
}

/// How the system prompt reaches backends that differ in system-role support.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SystemRole {
    #[default]
    #[serde(rename = "native")]
    Native,
    #[serde(rename = "merge")]
    MergeIntoUser,
}

fn default_timeout() -> u64 {
    120
}

fn default_max_tokens() -> u32 {
    4096
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    #[serde(default)]
    pub name: String,
    pub kind: ProviderKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    pub model: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_max_tokens")]
    pub max_output_tokens: u32,
    #[serde(default)]
    pub system_role: SystemRole,
    #[serde(default)]
    pub credentials_file: Option<PathBuf>,
    #[serde(default)]
    pub replay_store: Option<PathBuf>,
    #[serde(default = "default_true")]
    pub replay_strict: bool,
    #[serde(default)]
    pub record: Option<PathBuf>,
}

impl ProviderConfig {
    /// A strict replay provider over `store`.
    pub fn replay(name: impl Into<String>, model: impl Into<String>, store: impl Into<PathBuf>) -> Self {
        ProviderConfig {
            name: name.into(),
            kind: ProviderKind::Replay,
            endpoint: None,
            model: model.into(),
            timeout_secs: default_timeout(),
            max_output_tokens: default_max_tokens(),
            system_role: SystemRole::Native,
            credentials_file: None,
            replay_store: Some(store.into()),
            replay_strict: true,
            record: None,
        }
    }

    pub fn decoding(&self) -> Decoding {
        Decoding::new(self.model.clone(), self.max_output_tokens)
    }

    fn invalid(&self, field: &'static str, reason: impl Into<String>) -> ConfigError {
        ConfigError::Invalid {
            provider: self.name.clone(),
            field,
            reason: reason.into(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.trim().is_empty() {
            return Err(self.invalid("name", "must not be empty"));
        }
        if self.model.trim().is_empty() {
            return Err(self.invalid("model", "must not be empty"));
        }
        if self.max_output_tokens == 0 {
            return Err(self.invalid("max_output_tokens", "must be positive"));
        }
        if self.timeout_secs == 0 {
            return Err(self.invalid("timeout_secs", "must be positive"));
        }
        let needs_endpoint = self.kind == ProviderKind::Openai || !self.replay_strict;
        match &self.endpoint {
            Some(e) if !(e.starts_with("http://") || e.starts_with("https://")) => {
                return Err(self.invalid("endpoint", "must be an http(s) URL"));
            }
            None if needs_endpoint => return Err(self.invalid("endpoint", "required for live calls")),
            _ => {}
        }
        if self.kind == ProviderKind::Replay && self.replay_store.is_none() {
            return Err(self.invalid("replay_store", "required for kind = \"replay\""));
        }
        Ok(())
    }

    fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.credentials_file, &mut self.replay_store, &mut self.record].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    fn api_key(&self, env: &dyn Fn(&str) -> Option<String>) -> Result<String, ConfigError> {
        if let Some(k) = env(API_KEY_ENV).filter(|k| !k.trim().is_empty()) {
            return Ok(k.trim().to_string());
        }
        if let Some(path) = &self.credentials_file {
            let k = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
                path: path.clone(),
                detail: e.to_string(),
            })?;
            if !k.trim().is_empty() {
                return Ok(k.trim().to_string());
            }
        }
        Err(ConfigError::MissingKey {
            provider: self.name.clone(),
        })
    }

    fn live(&self, env: &dyn Fn(&str) -> Option<String>) -> Result<Arc<dyn ModelProvider>, ConfigError> {
        let key = self.api_key(env)?;
        let live: Arc<dyn ModelProvider> = Arc::new(ChatCompletionsProvider::new(
            self.name.clone(),
            self.endpoint.clone().expect("validated"),
            key,
            self.decoding(),
            self.system_role,
            Duration::from_secs(self.timeout_secs),
        )?);
        Ok(match &self.record {
            Some(path) => Arc::new(RecordingProvider::open(live, path)?),
            None => live,
        })
    }

    /// Build the provider, reading the key from the process environment.
    pub fn build(&self) -> Result<Arc<dyn ModelProvider>, ConfigError> {
        self.build_with_env(&|k| std::env::var(k).ok())
    }

    pub fn build_with_env(&self, env: &dyn Fn(&str) -> Option<String>) -> Result<Arc<dyn ModelProvider>, ConfigError> {
        self.validate()?;
        match self.kind {
            ProviderKind::Openai => self.live(env),
            ProviderKind::Replay => {
                let store = ReplayStore::load(self.replay_store.as_deref().expect("validated"))?;
                let replay = ReplayProvider::new(self.name.clone(), self.decoding(), store);
                if self.replay_strict {
                    Ok(Arc::new(replay))
                } else {
                    Ok(Arc::new(replay.with_fallback(self.live(env)?)))
                }
            }
        }
    }
}

/// A config document holding `[provider]` and/or `[providers.<name>]`.
/// Other top-level tables are ignored here.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
pub struct ProvidersFile {
    #[serde(default)]
    pub provider: Option<ProviderConfig>,
    #[serde(default)]
    pub providers: BTreeMap<String, ProviderConfig>,
}

impl ProvidersFile {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parse, filling empty names from table keys and resolving relative
    /// paths against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut f: ProvidersFile = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        if let Some(p) = &mut f.provider {
            if p.name.is_empty() {
                p.name = "default".into();
            }
            p.resolve_paths(base);
        }
        for (key, p) in f.providers.iter_mut() {
            if p.name.is_empty() {
                p.name = key.clone();
            }
            p.resolve_paths(base);
        }
        Ok(f)
    }

    /// `None` selects `[provider]`; a name selects `[providers.<name>]` or a
    /// `[provider]` carrying that name.
    pub fn select(&self, name: Option<&str>) -> Result<&ProviderConfig, ConfigError> {
        let found = match name {
            None => self.provider.as_ref().or_else(|| {
                if self.providers.len() == 1 {
                    self.providers.values().next()
                } else {
                    None
                }
            }),
            Some(n) => self
                .providers
                .get(n)
                .or_else(|| self.provider.as_ref().filter(|p| p.name == n)),
        };
        found.ok_or_else(|| {
            let mut names: Vec<&str> = self.providers.keys().map(String::as_str).collect();
            if let Some(p) = &self.provider {
                names.insert(0, &p.name);
            }
            ConfigError::UnknownProvider {
                name: name.unwrap_or("<default>").to_string(),
                available: names.join(", "),
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"
[provider]
name = "deepseek"
kind = "openai"
endpoint = "https://example.invalid/v1/chat/completions"
model = "deepseek-reasoner"
system_role = "merge"

[providers.fixtures]
kind = "replay"
model = "deepseek-reasoner"
replay_store = "store.jsonl"

[server]
bind = "127.0.0.1:0"
"#;

    #[test]
    fn parses_and_resolves() {
        let f = ProvidersFile::parse(DOC, Path::new("/etc/ac")).unwrap();
        let p = f.select(None).unwrap();
        assert_eq!(p.name, "deepseek");
        assert_eq!(p.system_role, SystemRole::MergeIntoUser);
        assert_eq!(p.timeout_secs, 120);
        let r = f.select(Some("fixtures")).unwrap();
        assert_eq!(r.name, "fixtures");
        assert_eq!(r.replay_store.as_deref(), Some(Path::new("/etc/ac/store.jsonl")));
        assert!(r.replay_strict);
        assert_eq!(f.select(Some("deepseek")).unwrap().name, "deepseek");
        let err = f.select(Some("gpt")).unwrap_err().to_string();
        assert!(err.contains("deepseek, fixtures"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected() {
        let doc = "[provider]\nkind = \"openai\"\nmodel = \"m\"\napi_key = \"sk-1\"\n";
        assert!(ProvidersFile::parse(doc, Path::new(".")).is_err());
    }

    #[test]
    fn validation() {
        let mut p = ProviderConfig::replay("r", "m", "x.jsonl");
        p.validate().unwrap();
        p.replay_strict = false;
        assert!(matches!(p.validate(), Err(ConfigError::Invalid { field: "endpoint", .. })));
        let mut p = ProviderConfig::replay("r", "m", "x.jsonl");
        p.replay_store = None;
        assert!(matches!(p.validate(), Err(ConfigError::Invalid { field: "replay_store", .. })));
        let mut p = ProviderConfig::replay("r", "", "x.jsonl");
        assert!(p.validate().is_err());
        p.model = "m".into();
        p.kind = ProviderKind::Openai;
        p.endpoint = Some("ftp://x".into());
        assert!(matches!(p.validate(), Err(ConfigError::Invalid { field: "endpoint", .. })));
    }

    #[test]
    fn key_from_env_or_file() {
        let f = ProvidersFile::parse(DOC, Path::new(".")).unwrap();
        let p = f.select(None).unwrap();
        assert!(matches!(p.build_with_env(&|_| None), Err(ConfigError::MissingKey { .. })));
        assert!(p.build_with_env(&|_| Some("sk-test".into())).is_ok());

        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("key"), "sk-file\n").unwrap();
        let mut p = p.clone();
        p.credentials_file = Some(dir.path().join("key"));
        assert_eq!(p.api_key(&|_| None).unwrap(), "sk-file");
    }

    #[test]
    fn missing_store_fails_at_build() {
        let p = ProviderConfig::replay("r", "m", "/nonexistent/store.jsonl");
        assert!(matches!(p.build_with_env(&|_| None), Err(ConfigError::Store(_))));
    }
}
