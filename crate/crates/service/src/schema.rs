//! Wire format, version 1.

use chrono::{DateTime, Utc};
use serde::Serialize;
use serde_json::Value;

use autocombat_core::refiner::{ChangeEntry, FeedbackComment, PolicyFlag, RefinementRequest, RefinementResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldProblem {
    pub field: String,
    pub problem: String,
}

fn problem(field: impl Into<String>, problem: impl Into<String>) -> FieldProblem {
    FieldProblem {
        field: field.into(),
        problem: problem.into(),
    }
}

fn optional_string(obj: &serde_json::Map<String, Value>, key: &str, path: &str, out: &mut Vec<FieldProblem>) -> Option<String> {
    match obj.get(key) {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => {
            out.push(problem(format!("{path}.{key}"), "must be a string"));
            None
        }
    }
}

/// Validate a request body, collecting every problem rather than stopping
/// at the first.
pub fn parse_request(body: &[u8]) -> Result<RefinementRequest, Vec<FieldProblem>> {
    let value: Value = serde_json::from_slice(body).map_err(|e| vec![problem("body", format!("not valid JSON: {e}"))])?;
    let Value::Object(obj) = value else {
        return Err(vec![problem("body", "must be a JSON object")]);
    };
    let mut problems = Vec::new();

    match obj.get("schema_version") {
        None => {}
        Some(Value::Number(n)) if n.as_u64() == Some(SCHEMA_VERSION as u64) => {}
        Some(_) => problems.push(problem("schema_version", format!("unsupported; this server speaks {SCHEMA_VERSION}"))),
    }

    let answer = match obj.get("answer") {
        None => {
            problems.push(problem("answer", "missing"));
            None
        }
        Some(Value::String(s)) if s.trim().is_empty() => {
            problems.push(problem("answer", "must not be empty"));
            None
        }
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => {
            problems.push(problem("answer", "must be a string"));
            None
        }
    };

    let question = match obj.get("question") {
        None => {
            problems.push(problem("question", "missing"));
            None
        }
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => {
            problems.push(problem("question", "must be a string"));
            None
        }
    };

    let mut comments = Vec::new();
    match obj.get("comments") {
        None => problems.push(problem("comments", "missing")),
        Some(Value::Array(items)) => {
            for (i, item) in items.iter().enumerate() {
                let path = format!("comments[{i}]");
                let Value::Object(c) = item else {
                    problems.push(problem(path, "must be an object"));
                    continue;
                };
                let author = optional_string(c, "author", &path, &mut problems);
                let timestamp = optional_string(c, "timestamp", &path, &mut problems).and_then(|t| match DateTime::parse_from_rfc3339(&t) {
                    Ok(d) => Some(d.with_timezone(&Utc)),
                    Err(_) => {
                        problems.push(problem(format!("{path}.timestamp"), "must be an RFC 3339 date-time"));
                        None
                    }
                });
                match c.get("body") {
                    Some(Value::String(b)) if !b.trim().is_empty() => comments.push(FeedbackComment {
                        author,
                        body: b.clone(),
                        timestamp,
                    }),
                    Some(Value::String(_)) => problems.push(problem(format!("{path}.body"), "must not be empty")),
                    Some(_) => problems.push(problem(format!("{path}.body"), "must be a string")),
                    None => problems.push(problem(format!("{path}.body"), "missing")),
                }
            }
        }
        Some(_) => problems.push(problem("comments", "must be an array")),
    }

    match (answer, question) {
        (Some(answer), Some(question)) if problems.is_empty() => Ok(RefinementRequest {
            original_answer: answer,
            comments,
            question,
        }),
        _ => Err(problems),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RefineResponse<'a> {
    pub schema_version: u32,
    pub concerns: &'a [String],
    pub used_question: bool,
    pub change_log: &'a [ChangeEntry],
    pub improved_answer: &'a str,
    #[serde(skip_serializing_if = "<[PolicyFlag]>::is_empty")]
    pub policy_flags: &'a [PolicyFlag],
    pub request_hash: &'a str,
}

impl<'a> RefineResponse<'a> {
    pub fn new(result: &'a RefinementResult, flags: &'a [PolicyFlag], request_hash: &'a str) -> Self {
        RefineResponse {
            schema_version: SCHEMA_VERSION,
            concerns: &result.concerns,
            used_question: result.used_question,
            change_log: &result.change_log,
            improved_answer: &result.improved_answer,
            policy_flags: flags,
            request_hash,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorBody {
    pub schema_version: u32,
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<FieldProblem>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub request_hash: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl ErrorBody {
    pub fn new(error: &'static str, message: impl Into<String>) -> Self {
        ErrorBody {
            schema_version: SCHEMA_VERSION,
            error,
            message: message.into(),
            fields: Vec::new(),
            request_hash: None,
            diagnostics: Vec::new(),
        }
    }
}
