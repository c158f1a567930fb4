//! Build a replay store from hand-written model outputs keyed by instance id.
//! Lets fixture authors write responses without a live model; the request
//! hashes are derived from the same prompt builders the pipeline uses.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::concern::{concern_prompt, instance_request};
use crate::curation::BenchmarkInstance;
use crate::provider::{request_hash, Decoding, ReplayStore, Transcript, TranscriptMetadata};
use crate::refiner::build_prompt;

/// Model output for one instance. A JSON string is used verbatim as the
/// completion text; any other value is serialized compactly.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CannedResponse {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classify: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine: Option<Value>,
}

pub type CannedResponses = BTreeMap<String, CannedResponse>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CannedError {
    #[error("cannot read {path}: {detail}")]
    Io { path: String, detail: String },
    #[error("responses file: {0}")]
    Parse(String),
    #[error("responses given for unknown instance(s): {}", .0.join(", "))]
    UnknownInstances(Vec<String>),
}

pub fn load_responses(path: &Path) -> Result<CannedResponses, CannedError> {
    let text = std::fs::read_to_string(path).map_err(|e| CannedError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| CannedError::Parse(e.to_string()))
}

fn completion_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn transcript(system: &str, user: &str, decoding: &Decoding, response: &Value, note: String) -> Transcript {
    Transcript {
        request_hash: request_hash(system, user, decoding),
        response_text: completion_text(response),
        metadata: TranscriptMetadata::default(),
        note: Some(note),
    }
}

/// One transcript per provided response. Instances without a response are
/// left out, so replaying them in strict mode fails.
pub fn build_store(
    instances: &[BenchmarkInstance],
    responses: &CannedResponses,
    decoding: &Decoding,
) -> Result<ReplayStore, CannedError> {
    let known: Vec<&str> = instances.iter().map(|i| i.instance_id()).collect();
    let unknown: Vec<String> = responses.keys().filter(|k| !known.contains(&k.as_str())).cloned().collect();
    if !unknown.is_empty() {
        return Err(CannedError::UnknownInstances(unknown));
    }
    let mut store = ReplayStore::default();
    for inst in instances {
        let Some(canned) = responses.get(inst.instance_id()) else {
            continue;
        };
        let request = instance_request(inst);
        if let Some(v) = &canned.classify {
            let p = concern_prompt(&request);
            store.insert(transcript(&p.system, &p.user, decoding, v, format!("{} classify", inst.instance_id())));
        }
        if let Some(v) = &canned.refine {
            let p = build_prompt(&request);
            store.insert(transcript(&p.system, &p.user, decoding, v, format!("{} refine", inst.instance_id())));
        }
    }
    Ok(store)
}
