use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use async_trait::async_trait;

use super::{request_hash, Completion, Decoding, ModelProvider, ProviderError, Transcript, TranscriptMetadata};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BadEntry {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StoreError {
    #[error("cannot read replay store {path}: {detail}")]
    Io { path: PathBuf, detail: String },
    #[error("corrupt replay store: {}", describe(.entries))]
    Corrupt { entries: Vec<BadEntry> },
}

fn describe(entries: &[BadEntry]) -> String {
    entries
        .iter()
        .map(|e| format!("line {}: {}", e.line, e.reason))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Transcripts keyed by request hash.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReplayStore {
    entries: BTreeMap<String, Transcript>,
}

impl ReplayStore {
    pub fn load(path: &Path) -> Result<Self, StoreError> {
        let text = std::fs::read_to_string(path).map_err(|e| StoreError::Io {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// Parse JSON lines. Blank lines are skipped; every bad line is reported.
    pub fn parse(text: &str) -> Result<Self, StoreError> {
        let mut entries: BTreeMap<String, Transcript> = BTreeMap::new();
        let mut bad = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let t: Transcript = match serde_json::from_str(line) {
                Ok(t) => t,
                Err(e) => {
                    bad.push(BadEntry {
                        line: line_no,
                        reason: e.to_string(),
                    });
                    continue;
                }
            };
            if t.request_hash.len() != 64 || !t.request_hash.bytes().all(|b| b.is_ascii_hexdigit()) {
                bad.push(BadEntry {
                    line: line_no,
                    reason: format!("request_hash {:?} is not a sha256 hex digest", t.request_hash),
                });
                continue;
            }
            match entries.get(&t.request_hash) {
                Some(prev) if prev.response_text != t.response_text => bad.push(BadEntry {
                    line: line_no,
                    reason: format!("conflicting duplicate of request {}", t.request_hash),
                }),
                Some(_) => {}
                None => {
                    entries.insert(t.request_hash.clone(), t);
                }
            }
        }
        if bad.is_empty() {
            Ok(ReplayStore { entries })
        } else {
            Err(StoreError::Corrupt { entries: bad })
        }
    }

    pub fn insert(&mut self, t: Transcript) {
        self.entries.insert(t.request_hash.clone(), t);
    }

    pub fn get(&self, hash: &str) -> Option<&Transcript> {
        self.entries.get(hash)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn transcripts(&self) -> impl Iterator<Item = &Transcript> {
        self.entries.values()
    }

    /// Canonical serialization: one line per transcript, sorted by hash.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for t in self.entries.values() {
            out.push_str(&serde_json::to_string(t).expect("transcript serializes"));
            out.push('\n');
        }
        out
    }
}

/// Serves completions from a store. A miss is an error in strict mode;
/// otherwise it falls through to `fallback` when one is set.
pub struct ReplayProvider {
    name: String,
    decoding: Decoding,
    store: ReplayStore,
    strict: bool,
    fallback: Option<Arc<dyn ModelProvider>>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl ReplayProvider {
    pub fn new(name: impl Into<String>, decoding: Decoding, store: ReplayStore) -> Self {
        ReplayProvider {
            name: name.into(),
            decoding,
            store,
            strict: true,
            fallback: None,
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        }
    }

    pub fn with_fallback(mut self, fallback: Arc<dyn ModelProvider>) -> Self {
        self.strict = false;
        self.fallback = Some(fallback);
        self
    }

    pub fn strict(&self) -> bool {
        self.strict
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }
}

#[async_trait]
impl ModelProvider for ReplayProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn decoding(&self) -> &Decoding {
        &self.decoding
    }

    fn replay_mode(&self) -> bool {
        true
    }

    async fn complete(&self, system: &str, user: &str) -> Result<Completion, ProviderError> {
        let hash = request_hash(system, user, &self.decoding);
        if let Some(t) = self.store.get(&hash) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(Completion {
                text: t.response_text.clone(),
                usage: t.metadata.usage.clone(),
            });
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        match (&self.fallback, self.strict) {
            (Some(live), false) => live.complete(system, user).await,
            _ => Err(ProviderError::MissingFixture { hash }),
        }
    }
}

/// Passes calls through to `inner` and appends a transcript per success.
pub struct RecordingProvider {
    inner: Arc<dyn ModelProvider>,
    file: Mutex<File>,
}

impl RecordingProvider {
    pub fn open(inner: Arc<dyn ModelProvider>, path: &Path) -> Result<Self, StoreError> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| StoreError::Io {
                path: path.to_path_buf(),
                detail: e.to_string(),
            })?;
        Ok(RecordingProvider {
            inner,
            file: Mutex::new(file),
        })
    }
}

#[async_trait]
impl ModelProvider for RecordingProvider {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn decoding(&self) -> &Decoding {
        self.inner.decoding()
    }

    fn replay_mode(&self) -> bool {
        self.inner.replay_mode()
    }

    async fn complete(&self, system: &str, user: &str) -> Result<Completion, ProviderError> {
        let started = Instant::now();
        let completion = self.inner.complete(system, user).await?;
        let t = Transcript {
            request_hash: request_hash(system, user, self.inner.decoding()),
            response_text: completion.text.clone(),
            metadata: TranscriptMetadata {
                latency_ms: started.elapsed().as_millis() as u64,
                usage: completion.usage.clone(),
            },
            note: None,
        };
        let mut line = serde_json::to_string(&t).map_err(|e| ProviderError::Record(e.to_string()))?;
        line.push('\n');
        let mut f = self.file.lock().map_err(|_| ProviderError::Record("store lock poisoned".into()))?;
        f.write_all(line.as_bytes())
            .and_then(|_| f.flush())
            .map_err(|e| ProviderError::Record(e.to_string()))?;
        Ok(completion)
    }
}
