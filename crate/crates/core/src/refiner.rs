//! The refinement prompt, structured-output validation, and the
//! prompt → model → parse loop.

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::post_model::Comment;
use crate::provider::{request_hash, Attempts, ModelProvider, ProviderError, RetryHint, RetryPolicy, Retryable};

pub const SYSTEM_PROMPT: &str = "You are a Stack Overflow Answer Refiner.

Policy:
• Edit ONLY if comments contain actionable, improvement-related concerns
• Do NOT add your own corrections or ideas. Do not evaluate technical correctness
• Even if a suggested change appears incorrect, apply it if it is an actionable improvement request
• You MAY read/use the question ONLY if needed to resolve those concerns
• Keep edits minimal, targeted, and concise; preserve original answer structure; SO tone; fenced code when useful
• Do not fabricate APIs/behavior/version claims. If a detail is not in comments (or necessary question context), do not invent it

Output JSON only:
{ \"concerns\": [\"actionable concerns\"], \"used_question\": true|false, \"change_log\": [{\"concern\": \"...\", \"change\": \"...\"}], \"improved_answer\": \"final answer text\" }

Tasks:
1) Extract only actionable improvement concerns from comments (ignore thanks, jokes, meta, vague, generic remarks).
2) Set used_question=true if you needed the question to resolve concerns; else false.
3) Produce a revised answer addressing ONLY those concerns; minimal edits; keep helpful structure.
4) If no actionable concerns, return the original answer unchanged.
5) If concerns conflict, follow the later one based on the given order.";

pub const RESULT_FIELDS: [&str; 4] = ["concerns", "used_question", "change_log", "improved_answer"];

/// A comment as sent to the model. Author and timestamp are optional so
/// that payloads scraped from a live page fit too.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackComment {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author: Option<String>,
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<DateTime<Utc>>,
}

impl From<&Comment> for FeedbackComment {
    fn from(c: &Comment) -> Self {
        FeedbackComment {
            author: (!c.author.is_empty()).then(|| c.author.clone()),
            body: c.body.clone(),
            timestamp: Some(c.timestamp),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinementRequest {
    pub original_answer: String,
    pub comments: Vec<FeedbackComment>,
    #[serde(default)]
    pub question: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid refinement request: {0}")]
pub struct InvalidRequest(pub String);

impl RefinementRequest {
    pub fn new(
        original_answer: impl Into<String>,
        comments: Vec<FeedbackComment>,
        question: impl Into<String>,
    ) -> Result<Self, InvalidRequest> {
        let r = RefinementRequest {
            original_answer: original_answer.into(),
            comments,
            question: question.into(),
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), InvalidRequest> {
        if self.original_answer.trim().is_empty() {
            return Err(InvalidRequest("original_answer is empty".into()));
        }
        if let Some(i) = self.comments.iter().position(|c| c.body.trim().is_empty()) {
            return Err(InvalidRequest(format!("comment {} has an empty body", i + 1)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptWarning {
    EmptyQuestion,
    NoComments,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub system: String,
    pub user: String,
    pub warnings: Vec<PromptWarning>,
}

/// Comments as a numbered list in source order, one per line.
pub fn numbered_comments(comments: &[FeedbackComment]) -> String {
    comments
        .iter()
        .enumerate()
        .map(|(i, c)| format!("\n{}. {}", i + 1, c.body.trim()))
        .collect()
}

pub fn user_prompt(request: &RefinementRequest) -> String {
    format!(
        "Original Answer: {};\nComments (mix of actionable + generic; order preserved as provided): {};\nQuestion (use ONLY if needed): {}",
        request.original_answer,
        numbered_comments(&request.comments),
        request.question
    )
}

pub fn build_prompt(request: &RefinementRequest) -> Prompt {
    let mut warnings = Vec::new();
    if request.question.trim().is_empty() {
        warnings.push(PromptWarning::EmptyQuestion);
    }
    if request.comments.is_empty() {
        warnings.push(PromptWarning::NoComments);
    }
    Prompt {
        system: SYSTEM_PROMPT.to_string(),
        user: user_prompt(request),
        warnings,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeEntry {
    pub concern: String,
    pub change: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinementResult {
    pub concerns: Vec<String>,
    pub used_question: bool,
    pub change_log: Vec<ChangeEntry>,
    pub improved_answer: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyFlag {
    /// No concerns were listed but the answer text changed; the original was
    /// restored.
    AnswerChangedWithoutConcerns,
    /// No concerns were listed but the change log was not empty; it was
    /// cleared.
    ChangeLogWithoutConcerns,
    /// A change-log entry names a concern absent from `concerns`.
    UnlistedConcern { index: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum SchemaProblem {
    NotJson(String),
    NotAnObject,
    Missing(String),
    Unexpected(String),
    WrongType { field: String, expected: String },
    EmptyAnswer,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("model output violates the result schema: {problems:?}")]
pub struct SchemaError {
    pub problems: Vec<SchemaProblem>,
    /// The unmodified model output, kept for audit.
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedResult {
    pub result: RefinementResult,
    pub flags: Vec<PolicyFlag>,
}

/// Remove a surrounding ```...``` wrapper (with or without an info string).
pub fn strip_code_fence(raw: &str) -> &str {
    let t = raw.trim();
    let Some(rest) = t.strip_prefix("```") else { return t };
    let Some(body_start) = rest.find('\n') else { return t };
    let body = &rest[body_start + 1..];
    match body.trim_end().strip_suffix("```") {
        Some(inner) => inner.trim(),
        None => t,
    }
}

fn wrong(field: &str, expected: &str) -> SchemaProblem {
    SchemaProblem::WrongType {
        field: field.into(),
        expected: expected.into(),
    }
}

fn string_list(v: &Value, field: &str, problems: &mut Vec<SchemaProblem>) -> Vec<String> {
    match v.as_array() {
        Some(items) if items.iter().all(Value::is_string) => {
            items.iter().map(|s| s.as_str().unwrap().to_string()).collect()
        }
        _ => {
            problems.push(wrong(field, "array of strings"));
            Vec::new()
        }
    }
}

fn change_entries(v: &Value, problems: &mut Vec<SchemaProblem>) -> Vec<ChangeEntry> {
    let Some(items) = v.as_array() else {
        problems.push(wrong("change_log", "array of {concern, change} objects"));
        return Vec::new();
    };
    let mut out = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let get = |k: &str| item.get(k).and_then(Value::as_str).map(str::to_string);
        match (get("concern"), get("change")) {
            (Some(concern), Some(change)) => out.push(ChangeEntry { concern, change }),
            _ => problems.push(wrong(&format!("change_log[{i}]"), "{concern: string, change: string}")),
        }
    }
    out
}

/// Validate raw model output against the four-field result schema and
/// enforce the no-concerns-no-change rule.
pub fn parse_result(raw: &str, original_answer: &str) -> Result<ParsedResult, SchemaError> {
    let fail = |problems| SchemaError {
        problems,
        raw: raw.to_string(),
    };
    let body = strip_code_fence(raw);
    let value: Value = serde_json::from_str(body).map_err(|e| fail(vec![SchemaProblem::NotJson(e.to_string())]))?;
    let Value::Object(obj) = value else {
        return Err(fail(vec![SchemaProblem::NotAnObject]));
    };
    let result = result_from_object(&obj).map_err(fail)?;
    Ok(enforce_policy(result, original_answer))
}

fn result_from_object(obj: &Map<String, Value>) -> Result<RefinementResult, Vec<SchemaProblem>> {
    let mut problems = Vec::new();
    for f in RESULT_FIELDS {
        if !obj.contains_key(f) {
            problems.push(SchemaProblem::Missing(f.into()));
        }
    }
    let known: BTreeSet<&str> = RESULT_FIELDS.into_iter().collect();
    for k in obj.keys() {
        if !known.contains(k.as_str()) {
            problems.push(SchemaProblem::Unexpected(k.clone()));
        }
    }
    if !problems.is_empty() {
        return Err(problems);
    }
    let concerns = string_list(&obj["concerns"], "concerns", &mut problems);
    let used_question = obj["used_question"].as_bool().unwrap_or_else(|| {
        problems.push(wrong("used_question", "boolean"));
        false
    });
    let change_log = change_entries(&obj["change_log"], &mut problems);
    let improved_answer = match obj["improved_answer"].as_str() {
        Some(s) if s.trim().is_empty() => {
            problems.push(SchemaProblem::EmptyAnswer);
            String::new()
        }
        Some(s) => s.to_string(),
        None => {
            problems.push(wrong("improved_answer", "string"));
            String::new()
        }
    };
    if !problems.is_empty() {
        return Err(problems);
    }
    Ok(RefinementResult {
        concerns,
        used_question,
        change_log,
        improved_answer,
    })
}

fn enforce_policy(mut result: RefinementResult, original_answer: &str) -> ParsedResult {
    let mut flags = Vec::new();
    if result.concerns.is_empty() {
        if result.improved_answer != original_answer {
            flags.push(PolicyFlag::AnswerChangedWithoutConcerns);
            result.improved_answer = original_answer.to_string();
        }
        if !result.change_log.is_empty() {
            flags.push(PolicyFlag::ChangeLogWithoutConcerns);
            result.change_log.clear();
        }
    } else {
        let listed: BTreeSet<&str> = result.concerns.iter().map(|c| c.trim()).collect();
        for (index, entry) in result.change_log.iter().enumerate() {
            if !listed.contains(entry.concern.trim()) {
                flags.push(PolicyFlag::UnlistedConcern { index });
            }
        }
    }
    ParsedResult { result, flags }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AttemptError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

impl Retryable for AttemptError {
    fn retry_hint(&self) -> RetryHint {
        match self {
            AttemptError::Provider(e) => e.retry_hint(),
            AttemptError::Schema(_) => RetryHint::Retry,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RefineError {
    #[error(transparent)]
    Invalid(#[from] InvalidRequest),
    #[error("refinement failed after {} attempt(s): {}", .attempts.errors.len(), .attempts.last())]
    Failed { attempts: Attempts<AttemptError> },
}

impl RefineError {
    pub fn last_attempt(&self) -> Option<&AttemptError> {
        match self {
            RefineError::Invalid(_) => None,
            RefineError::Failed { attempts } => Some(attempts.last()),
        }
    }

    /// One line per failed attempt.
    pub fn diagnostics(&self) -> Vec<String> {
        match self {
            RefineError::Invalid(e) => vec![e.to_string()],
            RefineError::Failed { attempts } => attempts
                .errors
                .iter()
                .enumerate()
                .map(|(i, e)| format!("attempt {}: {e}", i + 1))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Refinement {
    pub result: RefinementResult,
    pub flags: Vec<PolicyFlag>,
    pub prompt_warnings: Vec<PromptWarning>,
    pub request_hash: String,
    pub attempts: u32,
}

/// Build the prompt, call the model, and validate the output, retrying
/// transient provider failures and schema violations.
pub async fn refine(
    request: &RefinementRequest,
    provider: &dyn ModelProvider,
    retry: &RetryPolicy,
) -> Result<Refinement, RefineError> {
    request.validate()?;
    let prompt = build_prompt(request);
    let hash = request_hash(&prompt.system, &prompt.user, provider.decoding());
    let mut used = 0;
    let parsed = retry
        .run(|attempt| {
            used = attempt;
            let prompt = &prompt;
            async move {
                let completion = provider.complete(&prompt.system, &prompt.user).await?;
                Ok::<_, AttemptError>(parse_result(&completion.text, &request.original_answer)?)
            }
        })
        .await
        .map_err(|attempts| RefineError::Failed { attempts })?;
    Ok(Refinement {
        result: parsed.result,
        flags: parsed.flags,
        prompt_warnings: prompt.warnings,
        request_hash: hash,
        attempts: used,
    })
}
