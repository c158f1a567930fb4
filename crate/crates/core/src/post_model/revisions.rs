//! Saved revision-history pages.
//!
//! Expected layout: a `div.js-revisions` container holding one
//! `div.js-revision` per revision. Each block carries a
//! `span.relativetime[title]` (or `time[datetime]`) timestamp and the body,
//! either as markdown in `.js-revision-source` or rendered in `.s-prose`.

use chrono::{DateTime, NaiveDateTime, Utc};
use scraper::{ElementRef, Html, Node, Selector};

use super::AnswerVersion;

pub const REVISION_CONTAINER_SELECTOR: &str = "div.js-revisions";
pub const REVISION_BLOCK_SELECTOR: &str = "div.js-revision";
const TIMESTAMP_SELECTORS: [(&str, &str); 2] = [("span.relativetime", "title"), ("time", "datetime")];
const SOURCE_SELECTOR: &str = ".js-revision-source";
const RENDERED_SELECTOR: &str = ".s-prose";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RevisionParseError {
    #[error("revision page: no element matches {selector}")]
    MissingSelector { selector: &'static str },
    #[error("revision {ordinal}: no timestamp")]
    MissingTimestamp { ordinal: usize },
    #[error("revision {ordinal}: malformed timestamp {value:?}")]
    MalformedTimestamp { ordinal: usize, value: String },
    #[error("revision {ordinal}: no body ({SOURCE_SELECTOR} or {RENDERED_SELECTOR})")]
    MissingBody { ordinal: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevisionPage {
    /// Oldest first, ordinals 1..=n.
    pub versions: Vec<AnswerVersion>,
    pub warnings: Vec<String>,
}

/// Parse a saved revision-history page. Pages listing newest first (the
/// site's own order) are reversed silently; any other disorder is sorted by
/// timestamp, ties kept in DOM order, and reported as a warning.
pub fn parse_revision_page(html: &str) -> Result<RevisionPage, RevisionParseError> {
    let doc = Html::parse_document(html);
    let container_sel = Selector::parse(REVISION_CONTAINER_SELECTOR).unwrap();
    let block_sel = Selector::parse(REVISION_BLOCK_SELECTOR).unwrap();
    let container = doc
        .select(&container_sel)
        .next()
        .ok_or(RevisionParseError::MissingSelector {
            selector: REVISION_CONTAINER_SELECTOR,
        })?;

    let mut blocks = Vec::new();
    for (i, block) in container.select(&block_sel).enumerate() {
        let position = i + 1;
        let ordinal = block
            .value()
            .attr("data-revision")
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(position);
        let raw_ts = timestamp_text(block).ok_or(RevisionParseError::MissingTimestamp { ordinal })?;
        let ts = parse_timestamp(&raw_ts).ok_or_else(|| RevisionParseError::MalformedTimestamp {
            ordinal,
            value: raw_ts.clone(),
        })?;
        let body = body_markdown(block).ok_or(RevisionParseError::MissingBody { ordinal })?;
        blocks.push((ts, body));
    }
    if blocks.is_empty() {
        return Err(RevisionParseError::MissingSelector {
            selector: REVISION_BLOCK_SELECTOR,
        });
    }

    let mut warnings = Vec::new();
    let ascending = blocks.windows(2).all(|w| w[0].0 <= w[1].0);
    let descending = blocks.windows(2).all(|w| w[0].0 > w[1].0);
    if !ascending {
        if descending {
            blocks.reverse();
        } else {
            blocks.sort_by_key(|b| b.0);
            warnings.push("revision blocks were out of timestamp order and have been re-sorted".to_string());
        }
    }

    let versions = blocks
        .into_iter()
        .enumerate()
        .map(|(i, (ts, body))| AnswerVersion::new(i as u32 + 1, body, ts))
        .collect();
    Ok(RevisionPage { versions, warnings })
}

fn timestamp_text(block: ElementRef<'_>) -> Option<String> {
    TIMESTAMP_SELECTORS.iter().find_map(|(sel, attr)| {
        let sel = Selector::parse(sel).unwrap();
        block
            .select(&sel)
            .find_map(|el| el.value().attr(attr))
            .map(|s| s.trim().to_string())
    })
}

/// Accepts "2014-05-01 12:34:56Z", RFC 3339, and zone-less forms (read as UTC).
pub(crate) fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    let bare = s.strip_suffix('Z').unwrap_or(s);
    for fmt in ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(bare, fmt) {
            return Some(t.and_utc());
        }
    }
    None
}

fn body_markdown(block: ElementRef<'_>) -> Option<String> {
    let source = Selector::parse(SOURCE_SELECTOR).unwrap();
    if let Some(el) = block.select(&source).next() {
        return Some(el.text().collect());
    }
    let rendered = Selector::parse(RENDERED_SELECTOR).unwrap();
    block.select(&rendered).next().map(rendered_to_markdown)
}

// Minimal conversion of rendered HTML: paragraphs become blank-line separated
// text and <pre> blocks become fenced code.
fn rendered_to_markdown(el: ElementRef<'_>) -> String {
    let mut parts: Vec<String> = Vec::new();
    for child in el.children() {
        match child.value() {
            Node::Text(t) => {
                let t = t.trim();
                if !t.is_empty() {
                    parts.push(t.to_string());
                }
            }
            Node::Element(e) => {
                let Some(child) = ElementRef::wrap(child) else { continue };
                let text: String = child.text().collect();
                if e.name() == "pre" {
                    let code = text.strip_suffix('\n').unwrap_or(&text);
                    parts.push(format!("```\n{code}\n```"));
                } else {
                    let text = text.split_whitespace().collect::<Vec<_>>().join(" ");
                    if !text.is_empty() {
                        parts.push(text);
                    }
                }
            }
            _ => {}
        }
    }
    parts.join("\n\n")
}
