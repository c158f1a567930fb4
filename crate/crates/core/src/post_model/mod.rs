//! Questions, answers, comments and revisions, plus the parsers that build
//! them from raw page content.

mod revisions;
mod segment;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use revisions::{parse_revision_page, RevisionPage, RevisionParseError, REVISION_BLOCK_SELECTOR, REVISION_CONTAINER_SELECTOR};
pub use segment::{segment_answer, AnswerSegment, SegmentKind, SegmentWarning, Segmentation};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("comment {id}: body is empty")]
    EmptyCommentBody { id: String },
    #[error("thread {answer_id}: no answer versions")]
    NoVersions { answer_id: String },
    #[error("thread {answer_id}: revision ordinals must strictly increase with timestamps (at ordinal {ordinal})")]
    VersionOrder { answer_id: String, ordinal: u32 },
    #[error("thread {answer_id}: comments are not ordered by timestamp (at {comment_id})")]
    CommentOrder { answer_id: String, comment_id: String },
    #[error("thread {answer_id}: duplicate comment id {comment_id}")]
    DuplicateComment { answer_id: String, comment_id: String },
    #[error("thread {answer_id}: concern link {comment_id} -> revision {ordinal} references a missing {missing}")]
    DanglingLink {
        answer_id: String,
        comment_id: String,
        ordinal: u32,
        missing: &'static str,
    },
    #[error("comment count {0} has no quartile (expected 1..=13)")]
    QuartileOutOfRange(usize),
}

/// Manual comment category. Absent on unlabeled field data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GoldLabel {
    /// Improvement-related and addressed by a later revision.
    IA,
    /// Improvement-related but never addressed.
    INA,
    /// Generic comment (thanks, chatter, meta).
    GC,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CommentRepr")]
pub struct Comment {
    pub id: String,
    pub author: String,
    pub body: String,
    pub timestamp: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_label: Option<GoldLabel>,
}

#[derive(Deserialize)]
struct CommentRepr {
    id: String,
    #[serde(default)]
    author: String,
    body: String,
    timestamp: DateTime<Utc>,
    #[serde(default)]
    gold_label: Option<GoldLabel>,
}

impl TryFrom<CommentRepr> for Comment {
    type Error = ModelError;

    fn try_from(r: CommentRepr) -> Result<Self, Self::Error> {
        Comment::new(r.id, r.author, r.body, r.timestamp, r.gold_label)
    }
}

impl Comment {
    pub fn new(
        id: impl Into<String>,
        author: impl Into<String>,
        body: impl Into<String>,
        timestamp: DateTime<Utc>,
        gold_label: Option<GoldLabel>,
    ) -> Result<Self, ModelError> {
        let id = id.into();
        let body = body.into();
        if body.trim().is_empty() {
            return Err(ModelError::EmptyCommentBody { id });
        }
        Ok(Comment {
            id,
            author: author.into(),
            body,
            timestamp,
            gold_label,
        })
    }
}

/// One revision of an answer. `segments` is derived from `body_markdown` and
/// never serialized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VersionRepr", into = "VersionRepr")]
pub struct AnswerVersion {
    pub revision_ordinal: u32,
    pub body_markdown: String,
    pub timestamp: DateTime<Utc>,
    pub segments: Vec<AnswerSegment>,
}

#[derive(Serialize, Deserialize)]
struct VersionRepr {
    revision_ordinal: u32,
    body_markdown: String,
    timestamp: DateTime<Utc>,
}

impl From<VersionRepr> for AnswerVersion {
    fn from(r: VersionRepr) -> Self {
        AnswerVersion::new(r.revision_ordinal, r.body_markdown, r.timestamp)
    }
}

impl From<AnswerVersion> for VersionRepr {
    fn from(v: AnswerVersion) -> Self {
        VersionRepr {
            revision_ordinal: v.revision_ordinal,
            body_markdown: v.body_markdown,
            timestamp: v.timestamp,
        }
    }
}

impl AnswerVersion {
    pub fn new(revision_ordinal: u32, body_markdown: impl Into<String>, timestamp: DateTime<Utc>) -> Self {
        let body_markdown = body_markdown.into();
        let segments = segment_answer(&body_markdown).segments;
        AnswerVersion {
            revision_ordinal,
            body_markdown,
            timestamp,
            segments,
        }
    }

    pub fn code_block_count(&self) -> usize {
        self.segments.iter().filter(|s| s.kind == SegmentKind::Code).count()
    }
}

/// Human annotation: this comment's concern is incorporated by that revision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConcernLink {
    pub comment_id: String,
    pub revision_ordinal: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerThread {
    pub question_id: String,
    pub answer_id: String,
    pub question_title: String,
    #[serde(default)]
    pub question_body: String,
    #[serde(default)]
    pub question_tags: Vec<String>,
    pub versions: Vec<AnswerVersion>,
    #[serde(default)]
    pub comments: Vec<Comment>,
    #[serde(default)]
    pub concern_links: Vec<ConcernLink>,
}

impl AnswerThread {
    /// Check the structural invariants: at least one version, ordinals
    /// strictly increasing with non-decreasing timestamps, comments ordered
    /// by timestamp with unique ids, and links that resolve.
    pub fn validate(&self) -> Result<(), ModelError> {
        let answer_id = || self.answer_id.clone();
        if self.versions.is_empty() {
            return Err(ModelError::NoVersions { answer_id: answer_id() });
        }
        for pair in self.versions.windows(2) {
            if pair[1].revision_ordinal <= pair[0].revision_ordinal || pair[1].timestamp < pair[0].timestamp {
                return Err(ModelError::VersionOrder {
                    answer_id: answer_id(),
                    ordinal: pair[1].revision_ordinal,
                });
            }
        }
        let mut ids = HashSet::new();
        for (i, c) in self.comments.iter().enumerate() {
            if !ids.insert(c.id.as_str()) {
                return Err(ModelError::DuplicateComment {
                    answer_id: answer_id(),
                    comment_id: c.id.clone(),
                });
            }
            if i > 0 && c.timestamp < self.comments[i - 1].timestamp {
                return Err(ModelError::CommentOrder {
                    answer_id: answer_id(),
                    comment_id: c.id.clone(),
                });
            }
        }
        for link in &self.concern_links {
            let missing = if !ids.contains(link.comment_id.as_str()) {
                Some("comment")
            } else if self.version(link.revision_ordinal).is_none() {
                Some("revision")
            } else {
                None
            };
            if let Some(missing) = missing {
                return Err(ModelError::DanglingLink {
                    answer_id: answer_id(),
                    comment_id: link.comment_id.clone(),
                    ordinal: link.revision_ordinal,
                    missing,
                });
            }
        }
        Ok(())
    }

    pub fn version(&self, ordinal: u32) -> Option<&AnswerVersion> {
        self.versions.iter().find(|v| v.revision_ordinal == ordinal)
    }

    pub fn latest_version(&self) -> Option<&AnswerVersion> {
        self.versions.last()
    }

    /// Question text as handed to models: title, blank line, body.
    pub fn question_text(&self) -> String {
        match (self.question_title.trim().is_empty(), self.question_body.trim().is_empty()) {
            (_, true) => self.question_title.clone(),
            (true, false) => self.question_body.clone(),
            (false, false) => format!("{}\n\n{}", self.question_title, self.question_body),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QuartileTag {
    Q1,
    Q2,
    Q3,
    Q4,
}

impl QuartileTag {
    pub const ALL: [QuartileTag; 4] = [QuartileTag::Q1, QuartileTag::Q2, QuartileTag::Q3, QuartileTag::Q4];

    pub fn as_str(self) -> &'static str {
        match self {
            QuartileTag::Q1 => "Q1",
            QuartileTag::Q2 => "Q2",
            QuartileTag::Q3 => "Q3",
            QuartileTag::Q4 => "Q4",
        }
    }
}

impl fmt::Display for QuartileTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QuartileTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "Q1" | "q1" => Ok(QuartileTag::Q1),
            "Q2" | "q2" => Ok(QuartileTag::Q2),
            "Q3" | "q3" => Ok(QuartileTag::Q3),
            "Q4" | "q4" => Ok(QuartileTag::Q4),
            other => Err(format!("unknown quartile {other:?}")),
        }
    }
}

/// Comment-count buckets: 1 | 2-3 | 4-5 | 6-13.
pub fn quartile_of(comment_count: usize) -> Result<QuartileTag, ModelError> {
    match comment_count {
        1 => Ok(QuartileTag::Q1),
        2..=3 => Ok(QuartileTag::Q2),
        4..=5 => Ok(QuartileTag::Q3),
        6..=13 => Ok(QuartileTag::Q4),
        n => Err(ModelError::QuartileOutOfRange(n)),
    }
}
