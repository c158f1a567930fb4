//! Server configuration. The `[server]` table shares a TOML file with the
//! provider tables:
//!
//! ```toml
//! [server]
//! bind = "127.0.0.1:8787"
//! provider = "deepseek"          # omit to use [provider]
//! max_body_bytes = 262144
//! allowed_origins = ["chrome-extension://abcdefghijklmnop"]
//! rate_limit_per_minute = 10
//! max_in_flight = 4
//! audit_log = "audit.jsonl"
//! ```

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use autocombat_core::provider::{ConfigError, ProviderConfig, ProvidersFile};

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServerConfig {
    #[serde(default = "default_bind")]
    pub bind: String,
    #[serde(default)]
    pub provider: Option<String>,
    #[serde(default = "default_body_limit")]
    pub max_body_bytes: usize,
    /// Origins allowed to call the service from a browser. `"*"` allows any.
    #[serde(default)]
    pub allowed_origins: Vec<String>,
    #[serde(default = "default_rate")]
    pub rate_limit_per_minute: u32,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default)]
    pub audit_log: Option<PathBuf>,
}

fn default_bind() -> String {
    "127.0.0.1:8787".into()
}

fn default_body_limit() -> usize {
    256 * 1024
}

fn default_rate() -> u32 {
    10
}

fn default_in_flight() -> usize {
    4
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            bind: default_bind(),
            provider: None,
            max_body_bytes: default_body_limit(),
            allowed_origins: Vec::new(),
            rate_limit_per_minute: default_rate(),
            max_in_flight: default_in_flight(),
            audit_log: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceConfigError {
    #[error("cannot read {path}: {detail}")]
    Io { path: PathBuf, detail: String },
    #[error("config: {0}")]
    Parse(String),
    #[error("server.{field}: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error(transparent)]
    Provider(#[from] ConfigError),
}

#[derive(Deserialize)]
struct Document {
    #[serde(default)]
    server: ServerConfig,
}

impl ServerConfig {
    pub fn validate(&self) -> Result<SocketAddr, ServiceConfigError> {
        let invalid = |field, reason: &str| ServiceConfigError::Invalid {
            field,
            reason: reason.to_string(),
        };
        if self.max_body_bytes == 0 {
            return Err(invalid("max_body_bytes", "must be positive"));
        }
        if self.rate_limit_per_minute == 0 {
            return Err(invalid("rate_limit_per_minute", "must be positive"));
        }
        if self.max_in_flight == 0 {
            return Err(invalid("max_in_flight", "must be positive"));
        }
        if let Some(o) = self.allowed_origins.iter().find(|o| o.as_str() != "*" && !o.contains("://")) {
            return Err(invalid("allowed_origins", &format!("{o:?} is not an origin (scheme://host)")));
        }
        self.bind
            .parse()
            .map_err(|e| invalid("bind", &format!("{:?}: {e}", self.bind)))
    }
}

/// Server settings plus the single provider they select.
#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub server: ServerConfig,
    pub provider: ProviderConfig,
}

impl ServiceConfig {
    pub fn load(path: &Path) -> Result<Self, ServiceConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ServiceConfigError::Io {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, ServiceConfigError> {
        let doc: Document = toml::from_str(text).map_err(|e| ServiceConfigError::Parse(e.to_string()))?;
        let mut server = doc.server;
        server.validate()?;
        if let Some(p) = &mut server.audit_log {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        let providers = ProvidersFile::parse(text, base)?;
        let provider = providers.select(server.provider.as_deref())?.clone();
        provider.validate()?;
        Ok(ServiceConfig { server, provider })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[provider]
kind = "replay"
model = "m"
replay_store = "store.jsonl"
"#;

    #[test]
    fn defaults_and_relative_paths() {
        let c = ServiceConfig::parse(&format!("[server]\naudit_log = \"a.jsonl\"\n{BASE}"), Path::new("/etc/ac")).unwrap();
        assert_eq!(c.server.rate_limit_per_minute, 10);
        assert_eq!(c.server.audit_log.as_deref(), Some(Path::new("/etc/ac/a.jsonl")));
        assert_eq!(c.provider.replay_store.as_deref(), Some(Path::new("/etc/ac/store.jsonl")));
        assert!(ServiceConfig::parse(BASE, Path::new(".")).is_ok());
    }

    #[test]
    fn rejects_bad_values() {
        for bad in [
            "max_body_bytes = 0",
            "rate_limit_per_minute = 0",
            "max_in_flight = 0",
            "bind = \"nowhere\"",
            "allowed_origins = [\"example.com\"]",
            "colour = \"blue\"",
        ] {
            assert!(ServiceConfig::parse(&format!("[server]\n{bad}\n{BASE}"), Path::new(".")).is_err(), "{bad}");
        }
        let unknown = ServiceConfig::parse(&format!("[server]\nprovider = \"gpt\"\n{BASE}"), Path::new("."));
        assert!(matches!(unknown, Err(ServiceConfigError::Provider(ConfigError::UnknownProvider { .. }))));
    }
}
